//! Point-to-point last-passage percolation.
//!
//! `G_{u,v}` is the largest weight collected by an up-right path from `u` to
//! `v`, counting both endpoints. Tables are grown forward from a fixed
//! lower-left anchor ([`lpp_grid`]) or backward into a fixed upper-right
//! anchor ([`lpp_grid_to`]). Pairs with `u <= v` failing have `G = -inf`;
//! the recursions never do arithmetic on that value, boundary cells take the
//! single available predecessor instead.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{MultiConfig, Point, WeightField};

/// Value of `G_{u,v}` when `u <= v` fails.
pub const NEG_INF: f64 = f64::NEG_INFINITY;

/// Largest number of paths [`brute_force_lpp`] will enumerate.
pub const BRUTE_FORCE_PATH_LIMIT: u128 = 1_000_000;

/// `G_{origin, p}` for every `p` in the rectangle `origin..=top_right`.
#[derive(Debug, Clone, PartialEq)]
pub struct GTable {
    pub origin: Point,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl GTable {
    pub fn top_right(&self) -> Point {
        Point::new(
            self.origin.x + self.cols as i64 - 1,
            self.origin.y + self.rows as i64 - 1,
        )
    }

    pub fn contains(&self, p: Point) -> bool {
        self.origin.le(p) && p.le(self.top_right())
    }

    fn index(&self, p: Point) -> usize {
        (p.y - self.origin.y) as usize * self.cols + (p.x - self.origin.x) as usize
    }

    pub fn get(&self, p: Point) -> Option<f64> {
        self.contains(p).then(|| self.values[self.index(p)])
    }

    /// `G_{origin,p}`, `-inf` when `origin <= p` fails. Panics for points
    /// north or east of the table.
    pub fn value(&self, p: Point) -> f64 {
        assert!(p.le(self.top_right()), "{p:?} beyond table");
        if self.origin.le(p) {
            self.values[self.index(p)]
        } else {
            NEG_INF
        }
    }
}

/// Forward table from `origin` to the upper-right corner of `weights`.
pub fn lpp_grid(weights: &WeightField, origin: Point) -> Result<GTable> {
    lpp_grid_box(weights, origin, weights.top_right())
}

/// Forward table from `origin` over the rectangle `origin..=tr`.
pub fn lpp_grid_box(weights: &WeightField, origin: Point, tr: Point) -> Result<GTable> {
    if !weights.contains(origin) {
        return invalid(format!("origin {origin:?} outside weight field"));
    }
    if !weights.contains(tr) || !origin.le(tr) {
        return invalid(format!(
            "corner {tr:?} outside weight field or not north-east of {origin:?}"
        ));
    }
    let rows = (tr.y - origin.y + 1) as usize;
    let cols = (tr.x - origin.x + 1) as usize;
    let mut values = vec![0.0; rows * cols];
    for r in 0..rows {
        let wrow = weights.index(Point::new(origin.x, origin.y + r as i64));
        let w = &weights.values[wrow..wrow + cols];
        let (done, cur) = values.split_at_mut(r * cols);
        let cur = &mut cur[..cols];
        if r == 0 {
            let mut acc = 0.0;
            for c in 0..cols {
                acc += w[c];
                cur[c] = acc;
            }
        } else {
            let below = &done[(r - 1) * cols..];
            cur[0] = below[0] + w[0];
            for c in 1..cols {
                cur[c] = cur[c - 1].max(below[c]) + w[c];
            }
        }
    }
    Ok(GTable {
        origin,
        rows,
        cols,
        values,
    })
}

/// `G_{p, target}` for every `p` in the rectangle between the lower-left
/// corner of the field and `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct GTableTo {
    pub target: Point,
    pub origin: Point,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl GTableTo {
    pub fn contains(&self, p: Point) -> bool {
        self.origin.le(p) && p.le(self.target)
    }

    /// `G_{p,target}`, `-inf` when `p <= target` fails. Panics for points
    /// south or west of the table.
    pub fn value(&self, p: Point) -> f64 {
        assert!(self.origin.le(p), "{p:?} beyond table");
        if p.le(self.target) {
            self.values[(p.y - self.origin.y) as usize * self.cols + (p.x - self.origin.x) as usize]
        } else {
            NEG_INF
        }
    }
}

/// Backward table into `target`.
pub fn lpp_grid_to(weights: &WeightField, target: Point) -> Result<GTableTo> {
    if !weights.contains(target) {
        return invalid(format!("target {target:?} outside weight field"));
    }
    let origin = weights.origin;
    let rows = (target.y - origin.y + 1) as usize;
    let cols = (target.x - origin.x + 1) as usize;
    let mut values = vec![0.0; rows * cols];
    for r in (0..rows).rev() {
        let wrow = weights.index(Point::new(origin.x, origin.y + r as i64));
        let w = &weights.values[wrow..wrow + cols];
        let (cur, done) = values.split_at_mut((r + 1) * cols);
        let cur = &mut cur[r * cols..];
        if r == rows - 1 {
            let mut acc = 0.0;
            for c in (0..cols).rev() {
                acc += w[c];
                cur[c] = acc;
            }
        } else {
            let above = &done[..cols];
            cur[cols - 1] = above[cols - 1] + w[cols - 1];
            for c in (0..cols - 1).rev() {
                cur[c] = cur[c + 1].max(above[c]) + w[c];
            }
        }
    }
    Ok(GTableTo {
        target,
        origin,
        rows,
        cols,
        values,
    })
}

/// `G_{u,v}` by enumerating every up-right path. Test oracle for small
/// rectangles.
pub fn brute_force_lpp(weights: &WeightField, u: Point, v: Point) -> Result<f64> {
    if !weights.contains(u) || !weights.contains(v) {
        return invalid("endpoints must lie in the weight field");
    }
    if !u.le(v) {
        return Ok(NEG_INF);
    }
    let (dx, dy) = ((v.x - u.x) as u64, (v.y - u.y) as u64);
    let paths = binomial(dx + dy, dx.min(dy));
    if paths > BRUTE_FORCE_PATH_LIMIT {
        return Err(Error::SizeLimit {
            what: "up-right paths",
            needed: paths,
            limit: BRUTE_FORCE_PATH_LIMIT,
        });
    }
    fn walk(w: &WeightField, p: Point, v: Point, acc: f64, best: &mut f64) {
        let acc = acc + w.at(p);
        if p == v {
            *best = best.max(acc);
            return;
        }
        if p.x < v.x {
            walk(w, Point::new(p.x + 1, p.y), v, acc, best);
        }
        if p.y < v.y {
            walk(w, Point::new(p.x, p.y + 1), v, acc, best);
        }
    }
    let mut best = NEG_INF;
    walk(weights, u, v, 0.0, &mut best);
    Ok(best)
}

fn binomial(n: u64, k: u64) -> u128 {
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
        if r > u64::MAX as u128 {
            return r;
        }
    }
    r
}

/// Limit shape `g(x) = (sqrt|x1| + sqrt|x2|)^2` on the closed third quadrant.
pub fn shape_function(x1: f64, x2: f64) -> Result<f64> {
    if !(x1 <= 0.0 && x2 <= 0.0) {
        return invalid(format!(
            "shape function needs nonpositive coordinates, got ({x1}, {x2})"
        ));
    }
    let s = (-x1).sqrt() + (-x2).sqrt();
    Ok(s * s)
}

/// One backward lattice step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    /// `-e1`
    West,
    /// `-e2`
    South,
}

impl Step {
    pub fn apply(self, p: Point) -> Point {
        match self {
            Step::West => p.west(),
            Step::South => p.south(),
        }
    }
}

/// A down-left path given by its start and steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicPath {
    pub start: Point,
    pub steps: Vec<Step>,
    /// Set when the walk stopped at its step cap rather than at the anchor.
    pub truncated: bool,
}

impl GeodesicPath {
    pub fn points(&self) -> Vec<Point> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut p = self.start;
        out.push(p);
        for s in &self.steps {
            p = s.apply(p);
            out.push(p);
        }
        out
    }

    pub fn end(&self) -> Point {
        self.steps.iter().fold(self.start, |p, s| s.apply(p))
    }

    /// Number of leading `-e1` steps.
    pub fn initial_west_run(&self) -> usize {
        self.steps.iter().take_while(|s| **s == Step::West).count()
    }
}

/// Geodesic from `v` back to the table origin. Ties go to `-e2`.
pub fn backtrack_geodesic(g: &GTable, v: Point) -> Result<GeodesicPath> {
    if !g.contains(v) {
        return invalid(format!("{v:?} outside table"));
    }
    let o = g.origin;
    let mut p = v;
    let mut steps = Vec::with_capacity((v - o).l1() as usize);
    while p != o {
        let s = if p.x == o.x {
            Step::South
        } else if p.y == o.y {
            Step::West
        } else if g.value(p.west()) > g.value(p.south()) {
            Step::West
        } else {
            Step::South
        };
        steps.push(s);
        p = s.apply(p);
    }
    Ok(GeodesicPath {
        start: v,
        steps,
        truncated: false,
    })
}

/// Last-passage growth on the half-plane above level 0.
///
/// `initial` holds the increments `G^i_{(k,0)} - G^i_{(k-1,0)}` on `[a, b]`;
/// `weights` must cover columns `a-1..=b` on levels `1..=T`. Paths may enter
/// the upper half-plane at any column `j >= a-1`, which makes
/// `G^i_{(k,t)} = max_{a-1<=j<=k} (G^i_{(j,0)} + G_{(j,1),(k,t)})`.
/// Returns the increments at levels `1..=T`.
pub fn stationary_halfplane_lpp(initial: &MultiConfig, weights: &WeightField) -> Result<Vec<MultiConfig>> {
    let a = initial.offset();
    let len = initial.len();
    if weights.origin != Point::new(a - 1, 1) || weights.cols != len + 1 {
        return invalid(format!(
            "weights must start at ({}, 1) and span {} columns",
            a - 1,
            len + 1
        ));
    }
    let levels = weights.rows;
    let mut out: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(initial.n_lines()); levels];
    for line in &initial.lines {
        // g[c] = G at column a-1+c on the current level
        let mut g = Vec::with_capacity(len + 1);
        g.push(0.0);
        let mut acc = 0.0;
        for v in &line.values {
            acc += v;
            g.push(acc);
        }
        for (t, level_out) in out.iter_mut().enumerate() {
            let w = &weights.values[t * (len + 1)..(t + 1) * (len + 1)];
            g[0] += w[0];
            for c in 1..=len {
                g[c] = g[c - 1].max(g[c]) + w[c];
            }
            level_out.push((1..=len).map(|c| g[c] - g[c - 1]).collect());
        }
    }
    out.into_iter()
        .map(|lines| {
            MultiConfig::new(
                lines
                    .into_iter()
                    .map(|v| crate::lattice::SeqWindow::new(a, v))
                    .collect(),
                initial.rates.clone(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{sample_exp_field, RngSpec};
    use proptest::prelude::*;

    fn field(seed: u64, rows: usize, cols: usize) -> WeightField {
        sample_exp_field(Point::new(-3, 2), rows, cols, 1.0, &RngSpec::new(seed, "lpp-test"))
    }

    #[test]
    fn hand_computed_two_by_two() {
        // level 0: 1 5 ; level 1: 2 1
        let w = WeightField::new(Point::new(0, 0), 2, 2, vec![1.0, 5.0, 2.0, 1.0]).unwrap();
        let g = lpp_grid(&w, Point::new(0, 0)).unwrap();
        assert_eq!(g.value(Point::new(1, 1)), 7.0);
        assert_eq!(g.value(Point::new(0, 1)), 3.0);
        let path = backtrack_geodesic(&g, Point::new(1, 1)).unwrap();
        assert_eq!(path.steps, vec![Step::South, Step::West]);
        assert_eq!(g.value(Point::new(-1, 1)), NEG_INF);
    }

    #[test]
    fn ties_go_south() {
        let w = WeightField::new(Point::new(0, 0), 2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let g = lpp_grid(&w, Point::new(0, 0)).unwrap();
        let path = backtrack_geodesic(&g, Point::new(1, 1)).unwrap();
        assert_eq!(path.steps, vec![Step::South, Step::West]);
    }

    #[test]
    fn brute_force_size_limit() {
        let w = field(1, 30, 30);
        let err = brute_force_lpp(&w, w.origin, w.top_right()).unwrap_err();
        assert!(matches!(err, Error::SizeLimit { .. }));
    }

    #[test]
    fn shape_function_values() {
        assert_eq!(shape_function(-1.0, -1.0).unwrap(), 4.0);
        assert_eq!(shape_function(-4.0, 0.0).unwrap(), 4.0);
        assert!(shape_function(1.0, -1.0).is_err());
    }

    #[test]
    fn backward_table_matches_forward_tables() {
        let w = field(5, 6, 7);
        let target = Point::new(1, 6);
        let back = lpp_grid_to(&w, target).unwrap();
        for y in w.origin.y..=target.y {
            for x in w.origin.x..=target.x {
                let p = Point::new(x, y);
                let fwd = lpp_grid(&w, p).unwrap();
                assert!((back.value(p) - fwd.value(target)).abs() < 1e-12);
            }
        }
        assert_eq!(back.value(Point::new(target.x + 1, target.y)), NEG_INF);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn grid_matches_brute_force(seed in 0u64..1_000_000, rows in 1usize..7, cols in 1usize..7) {
            let w = field(seed, rows, cols);
            let g = lpp_grid(&w, w.origin).unwrap();
            for y in 0..rows as i64 {
                for x in 0..cols as i64 {
                    let p = w.origin + Point::new(x, y);
                    let b = brute_force_lpp(&w, w.origin, p).unwrap();
                    prop_assert!((g.value(p) - b).abs() <= 1e-9);
                }
            }
        }

        #[test]
        fn recursion_and_geodesic_weight(seed in 0u64..1_000_000, rows in 1usize..12, cols in 1usize..12) {
            let w = field(seed, rows, cols);
            let g = lpp_grid(&w, w.origin).unwrap();
            prop_assert_eq!(g.value(w.origin), w.at(w.origin));
            for y in 0..rows as i64 {
                for x in 0..cols as i64 {
                    let p = w.origin + Point::new(x, y);
                    if p == w.origin { continue; }
                    let pred = g.value(p.west()).max(g.value(p.south()));
                    prop_assert_eq!(g.value(p), pred + w.at(p));
                }
            }
            let path = backtrack_geodesic(&g, w.top_right()).unwrap();
            prop_assert_eq!(path.end(), w.origin);
            let total: f64 = path.points().iter().map(|p| w.at(*p)).sum();
            prop_assert!((total - g.value(w.top_right())).abs() <= 1e-9);
        }

        #[test]
        fn superadditive_and_monotone(seed in 0u64..1_000_000, scale in 1.0f64..3.0) {
            let w = field(seed, 8, 8);
            let g = lpp_grid(&w, w.origin).unwrap();
            let mid = w.origin + Point::new(3, 4);
            let gm = lpp_grid(&w, mid).unwrap();
            let tr = w.top_right();
            prop_assert!(g.value(tr) + 1e-9 >= g.value(mid) + gm.value(tr) - w.at(mid));
            let bigger = WeightField::new(w.origin, 8, 8, w.values.iter().map(|v| v * scale).collect()).unwrap();
            let gb = lpp_grid(&bigger, w.origin).unwrap();
            for (a, b) in g.values.iter().zip(&gb.values) {
                prop_assert!(*b + 1e-9 >= *a);
            }
        }
    }
}
