//! Busemann increments read off finite lattices, Busemann geodesics,
//! coalescence and the competition interface.
//!
//! The estimator anchors one forward table at a far corner `v` south-west
//! of the sites and reports
//!
//! ```text
//! horizontal(x) = G_{v,x} - G_{v,x-e1}   ~  B_{x-e1,x}
//! vertical(x)   = G_{v,x} - G_{v,x-e2}   ~  B_{x-e2,x}
//! ```
//!
//! with `v = center + round(N u(rho))`. Weight recovery
//! `Y_x = min(horizontal, vertical)` and additivity around unit squares are
//! identities of the table, so they hold exactly. When the corners for
//! several `rho` share one center they move east and south as `rho` grows,
//! which makes horizontal increments nondecreasing and vertical ones
//! nonincreasing in `rho` on every lattice.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::{Point, SeqWindow, WeightField};
use crate::lpp::{lpp_grid, lpp_grid_box, GTable, GeodesicPath, Step};
use crate::queueing::{run_queue, BoundaryPolicy};
use crate::rng::{sample_exp_field, RngSpec};

/// Smallest allowed distance from a site to its far corner, as a fraction of `N`.
pub const MIN_CORNER_DISTANCE: f64 = 0.4;

/// Points of the default grid for `rho*`.
pub const RHO_GRID_LEN: usize = 64;
pub const RHO_GRID_MIN: f64 = 1.05;
pub const RHO_GRID_MAX: f64 = 20.0;

/// A third-quadrant unit direction and its density parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub u: (f64, f64),
    pub rho: f64,
}

/// `u(rho) = -(1, (rho-1)^2) / (1 + (rho-1)^2)`.
pub fn direction_of_rho(rho: f64) -> Result<Direction> {
    if !(rho > 1.0 && rho.is_finite()) {
        return invalid(format!("rho must be in (1, inf), got {rho}"));
    }
    let s = (rho - 1.0) * (rho - 1.0);
    let d = 1.0 + s;
    Ok(Direction {
        u: (-1.0 / d, -s / d),
        rho,
    })
}

/// Inverse of [`direction_of_rho`]: `rho = (sqrt(-u1) + sqrt(-u2)) / sqrt(-u1)`.
/// `u` must have both coordinates negative and unit l1 norm (to 1e-9).
pub fn rho_of_direction(u1: f64, u2: f64) -> Result<Direction> {
    if !(u1 < 0.0 && u2 < 0.0) || ((u1 + u2) + 1.0).abs() > 1e-9 {
        return invalid(format!(
            "({u1}, {u2}) is not inside the open third-quadrant unit segment"
        ));
    }
    let rho = 1.0 + (u2 / u1).sqrt();
    let norm = -(u1 + u2);
    Ok(Direction {
        u: (u1 / norm, u2 / norm),
        rho,
    })
}

/// Geometric grid `1.05 (20/1.05)^(i/64)`, `i = 1..=64`.
pub fn rho_grid() -> Vec<f64> {
    let ratio = RHO_GRID_MAX / RHO_GRID_MIN;
    let mut g: Vec<f64> = (1..=RHO_GRID_LEN)
        .map(|i| RHO_GRID_MIN * ratio.powf(i as f64 / RHO_GRID_LEN as f64))
        .collect();
    g[RHO_GRID_LEN - 1] = RHO_GRID_MAX;
    g
}

/// `center + round(N u(rho))`.
pub fn far_corner(center: Point, n: usize, rho: f64) -> Result<Point> {
    let d = direction_of_rho(rho)?;
    let n = n as f64;
    Ok(Point::new(
        center.x + (n * d.u.0).round() as i64,
        center.y + (n * d.u.1).round() as i64,
    ))
}

/// Bounding box `(origin, rows, cols)` of the sites and all far corners.
pub fn estimator_field(sites: &[Point], center: Point, rhos: &[f64], n: usize) -> Result<(Point, usize, usize)> {
    if sites.is_empty() || rhos.is_empty() {
        return invalid("need at least one site and one rho");
    }
    let mut lo = sites[0];
    let mut hi = sites[0];
    let corners = rhos
        .iter()
        .map(|r| far_corner(center, n, *r))
        .collect::<Result<Vec<_>>>()?;
    for p in sites.iter().chain(&corners) {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    Ok((lo, (hi.y - lo.y + 1) as usize, (hi.x - lo.x + 1) as usize))
}

/// Estimated increments at a set of sites, one row per `rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusemannEdgeEstimates {
    pub n: usize,
    pub center: Point,
    pub sites: Vec<Point>,
    pub rhos: Vec<f64>,
    pub far_corners: Vec<Point>,
    /// `horizontal[r][i]` estimates `B^{rhos[r]}_{x-e1,x}` at `x = sites[i]`.
    pub horizontal: Vec<Vec<f64>>,
    pub vertical: Vec<Vec<f64>>,
}

impl BusemannEdgeEstimates {
    /// Level shared by all sites, if any.
    pub fn level(&self) -> Option<i64> {
        let t = self.sites.first()?.y;
        self.sites.iter().all(|p| p.y == t).then_some(t)
    }

    pub fn rho_index(&self, rho: f64) -> Option<usize> {
        self.rhos.iter().position(|r| *r == rho)
    }

    /// Largest `|min(horizontal, vertical) - Y_x|` over sites and `rho`.
    pub fn recovery_error(&self, weights: &WeightField) -> f64 {
        let mut err: f64 = 0.0;
        for (h, v) in self.horizontal.iter().zip(&self.vertical) {
            for (i, p) in self.sites.iter().enumerate() {
                err = err.max((h[i].min(v[i]) - weights.at(*p)).abs());
            }
        }
        err
    }
}

/// Reads increments at `sites` from tables anchored at
/// `center + round(N u(rho))` for each `rho`.
pub fn estimate_busemann_sites(
    weights: &WeightField,
    sites: &[Point],
    center: Point,
    rhos: &[f64],
    n: usize,
) -> Result<BusemannEdgeEstimates> {
    if sites.is_empty() || rhos.is_empty() {
        return invalid("need at least one site and one rho");
    }
    let hi = sites
        .iter()
        .fold(sites[0], |a, p| Point::new(a.x.max(p.x), a.y.max(p.y)));
    let mut far_corners = Vec::with_capacity(rhos.len());
    let mut horizontal = Vec::with_capacity(rhos.len());
    let mut vertical = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let v = far_corner(center, n, rho)?;
        for p in sites {
            if p.x <= v.x || p.y <= v.y {
                return invalid(format!(
                    "site {p:?} is not strictly north-east of far corner {v:?} (rho {rho})"
                ));
            }
            if ((*p - v).l1() as f64) < MIN_CORNER_DISTANCE * n as f64 {
                return invalid(format!(
                    "site {p:?} is closer than {MIN_CORNER_DISTANCE} N to far corner {v:?} (rho {rho}, N {n})"
                ));
            }
        }
        let g = lpp_grid_box(weights, v, hi)?;
        horizontal.push(sites.iter().map(|p| g.value(*p) - g.value(p.west())).collect());
        vertical.push(sites.iter().map(|p| g.value(*p) - g.value(p.south())).collect());
        far_corners.push(v);
    }
    Ok(BusemannEdgeEstimates {
        n,
        center,
        sites: sites.to_vec(),
        rhos: rhos.to_vec(),
        far_corners,
        horizontal,
        vertical,
    })
}

/// Sites `(k, t)` for `k0 <= k <= k1`, centered at their midpoint.
pub fn estimate_busemann_level(
    weights: &WeightField,
    t: i64,
    k0: i64,
    k1: i64,
    rhos: &[f64],
    n: usize,
) -> Result<BusemannEdgeEstimates> {
    if k1 < k0 {
        return invalid(format!("empty window {k0}..={k1}"));
    }
    let sites: Vec<Point> = (k0..=k1).map(|k| Point::new(k, t)).collect();
    let center = Point::new((k0 + k1).div_euclid(2), t);
    estimate_busemann_sites(weights, &sites, center, rhos, n)
}

/// Samples the smallest Exp(1) field the estimator needs and runs it.
pub fn sample_busemann_sites(
    sites: &[Point],
    center: Point,
    rhos: &[f64],
    n: usize,
    rng: &RngSpec,
) -> Result<(WeightField, BusemannEdgeEstimates)> {
    let (origin, rows, cols) = estimator_field(sites, center, rhos, n)?;
    let w = sample_exp_field(origin, rows, cols, 1.0, rng);
    let est = estimate_busemann_sites(&w, sites, center, rhos, n)?;
    Ok((w, est))
}

/// [`sample_busemann_sites`] for a level window.
pub fn sample_busemann_level(
    t: i64,
    k0: i64,
    k1: i64,
    rhos: &[f64],
    n: usize,
    rng: &RngSpec,
) -> Result<(WeightField, BusemannEdgeEstimates)> {
    if k1 < k0 {
        return invalid(format!("empty window {k0}..={k1}"));
    }
    let sites: Vec<Point> = (k0..=k1).map(|k| Point::new(k, t)).collect();
    sample_busemann_sites(&sites, Point::new((k0 + k1).div_euclid(2), t), rhos, n, rng)
}

/// Follows the smaller increment: `-e1` when `G(x-e1) > G(x-e2)`, else
/// `-e2`. Stops at the table origin or after `max_steps`.
pub fn busemann_geodesic(g: &GTable, start: Point, max_steps: usize) -> Result<GeodesicPath> {
    if !g.contains(start) {
        return invalid(format!("{start:?} outside table"));
    }
    let o = g.origin;
    let mut p = start;
    let mut steps = Vec::new();
    while p != o && steps.len() < max_steps {
        let s = if p.x == o.x {
            Step::South
        } else if p.y == o.y || g.value(p.west()) > g.value(p.south()) {
            Step::West
        } else {
            Step::South
        };
        steps.push(s);
        p = s.apply(p);
    }
    Ok(GeodesicPath {
        start,
        truncated: p != o,
        steps,
    })
}

/// Number of leading `-e1` steps of the Busemann geodesic from `x`, reading
/// at most `cap` steps. `None` when the run reaches the bottom row of the
/// table or the cap, so its length is censored.
pub fn initial_west_run(g: &GTable, x: Point, cap: usize) -> Result<Option<usize>> {
    if !g.contains(x) {
        return invalid(format!("{x:?} outside table"));
    }
    let o = g.origin;
    let mut p = x;
    let mut run = 0;
    while run < cap {
        if p.y == o.y || p.x == o.x {
            return Ok(None);
        }
        if g.value(p.west()) > g.value(p.south()) {
            run += 1;
            p = p.west();
        } else {
            return Ok(Some(run));
        }
    }
    Ok(None)
}

/// First point of `a` that lies on `b` and after which the two paths take
/// the same steps for as long as both continue.
pub fn coalescence_point(a: &GeodesicPath, b: &GeodesicPath) -> Option<Point> {
    let pb = b.points();
    let index: HashMap<Point, usize> = pb.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    for (i, p) in a.points().iter().enumerate() {
        if let Some(&j) = index.get(p) {
            let agree = a.steps[i..].iter().zip(&b.steps[j..]).all(|(s, t)| s == t);
            if agree {
                return Some(*p);
            }
        }
    }
    None
}

/// Sum of weights over every point of the path.
pub fn path_weight(weights: &WeightField, path: &GeodesicPath) -> Result<f64> {
    let mut total = 0.0;
    for p in path.points() {
        match weights.get(p) {
            Some(w) => total += w,
            None => return invalid(format!("path leaves the weight field at {p:?}")),
        }
    }
    Ok(total)
}

/// Which branch of the geodesic tree into the target a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subtree {
    /// geodesic enters the target through `x - e1`
    West,
    /// geodesic enters through `x - e2`; ties land here
    South,
}

/// Subtree labels for every point of `[weights.origin, target]` other
/// than the target.
#[derive(Debug, Clone, PartialEq)]
pub struct SubtreeLabels {
    pub target: Point,
    pub origin: Point,
    pub rows: usize,
    pub cols: usize,
    west: Vec<bool>,
}

impl SubtreeLabels {
    pub fn contains(&self, p: Point) -> bool {
        self.origin.le(p) && p.le(self.target) && p != self.target
    }

    pub fn label(&self, p: Point) -> Option<Subtree> {
        if !self.contains(p) {
            return None;
        }
        let i = (p.y - self.origin.y) as usize * self.cols + (p.x - self.origin.x) as usize;
        Some(if self.west[i] { Subtree::West } else { Subtree::South })
    }
}

/// Labels `p` West iff `G_{p,x-e1} > G_{p,x-e2}`, computing both columns of
/// values row by row from the top.
pub fn subtree_labels(weights: &WeightField, target: Point) -> Result<SubtreeLabels> {
    let origin = weights.origin;
    if !weights.contains(target) || target.x <= origin.x || target.y <= origin.y {
        return invalid(format!(
            "target {target:?} must lie in the field strictly north-east of {origin:?}"
        ));
    }
    let rows = (target.y - origin.y + 1) as usize;
    let cols = (target.x - origin.x + 1) as usize;
    let ninf = f64::NEG_INFINITY;
    // a = G_{p, x-e1}, b = G_{p, x-e2}; -inf plus a weight stays -inf
    let mut a_up = vec![ninf; cols];
    let mut b_up = vec![ninf; cols];
    let mut a_cur = vec![ninf; cols];
    let mut b_cur = vec![ninf; cols];
    let mut west = vec![false; rows * cols];
    for r in (0..rows).rev() {
        let wrow = weights.index(Point::new(origin.x, origin.y + r as i64));
        let w = &weights.values[wrow..wrow + cols];
        for c in (0..cols).rev() {
            let (a, b) = if r == rows - 1 && c == cols - 1 {
                (ninf, ninf)
            } else if r == rows - 1 && c == cols - 2 {
                (w[c], ninf)
            } else if r == rows - 2 && c == cols - 1 {
                (ninf, w[c])
            } else {
                let (ae, be) = if c + 1 < cols {
                    (a_cur[c + 1], b_cur[c + 1])
                } else {
                    (ninf, ninf)
                };
                (w[c] + ae.max(a_up[c]), w[c] + be.max(b_up[c]))
            };
            a_cur[c] = a;
            b_cur[c] = b;
            west[r * cols + c] = a > b;
        }
        std::mem::swap(&mut a_up, &mut a_cur);
        std::mem::swap(&mut b_up, &mut b_cur);
    }
    Ok(SubtreeLabels {
        target,
        origin,
        rows,
        cols,
        west,
    })
}

/// Competition interface from the target. The path is encoded on lattice
/// points: a point `p` of the returned path stands for the dual vertex
/// `p - (1/2, 1/2)`, whose north-west neighbor `p - e1` is in the West
/// subtree and south-east neighbor `p - e2` in the South subtree. Stops
/// when the next cell leaves the labeled box or after `max_steps`.
pub fn competition_interface(labels: &SubtreeLabels, max_steps: usize) -> GeodesicPath {
    let mut p = labels.target;
    let mut steps = Vec::new();
    let mut truncated = false;
    loop {
        let q = Point::new(p.x - 1, p.y - 1);
        let Some(l) = labels.label(q) else { break };
        if steps.len() == max_steps {
            truncated = true;
            break;
        }
        let s = match l {
            Subtree::West => Step::South,
            Subtree::South => Step::West,
        };
        steps.push(s);
        p = s.apply(p);
    }
    GeodesicPath {
        start: labels.target,
        steps,
        truncated,
    }
}

/// Dual-lattice coordinates of an interface path.
pub fn dual_points(path: &GeodesicPath) -> Vec<(f64, f64)> {
    path.points()
        .into_iter()
        .map(|p| (p.x as f64 - 0.5, p.y as f64 - 0.5))
        .collect()
}

/// `rho*(x) > lambda`, read as `horizontal < vertical` at the far corner
/// `x + round(N u(lambda))`.
pub fn rho_star_exceeds(labels: &SubtreeLabels, lambda: f64, n: usize) -> Result<bool> {
    let v = far_corner(labels.target, n, lambda)?;
    match labels.label(v) {
        Some(l) => Ok(l == Subtree::West),
        None => invalid(format!(
            "far corner {v:?} for lambda {lambda} is outside the labeled box or equals the target"
        )),
    }
}

/// `rho*(x)` resolved on a grid: it lies in `(lower, upper]`, with
/// `upper = inf` beyond the last grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CifThreshold {
    pub site: Point,
    pub lower: f64,
    pub upper: f64,
}

impl CifThreshold {
    /// Point estimate: the bracket's upper end, or its lower end when open.
    pub fn estimate(&self) -> f64 {
        if self.upper.is_finite() {
            self.upper
        } else {
            self.lower
        }
    }
}

/// Brackets `rho*(target)` on an increasing `grid` of values above 1.
pub fn rho_star_bracket(labels: &SubtreeLabels, grid: &[f64], n: usize) -> Result<CifThreshold> {
    if grid.windows(2).any(|w| w[0] >= w[1]) || !matches!(grid.first(), Some(g) if *g > 1.0) {
        return invalid("rho grid must be increasing and above 1");
    }
    let mut lower = 1.0;
    for &r in grid {
        if !rho_star_exceeds(labels, r, n)? {
            return Ok(CifThreshold {
                site: labels.target,
                lower,
                upper: r,
            });
        }
        lower = r;
    }
    Ok(CifThreshold {
        site: labels.target,
        lower,
        upper: f64::INFINITY,
    })
}

/// A 0/1 window with an index offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorWindow {
    pub offset: i64,
    pub values: Vec<bool>,
}

impl IndicatorWindow {
    pub fn get(&self, k: i64) -> Option<bool> {
        if k < self.offset {
            return None;
        }
        self.values.get((k - self.offset) as usize).copied()
    }

    /// Consecutive ones going left from `k`, inclusive. `None` when the run
    /// reaches the left edge of the window.
    pub fn run_left(&self, k: i64) -> Option<usize> {
        let mut i = k;
        let mut run = 0;
        loop {
            match self.get(i)? {
                true => run += 1,
                false => return Some(run),
            }
            i -= 1;
        }
    }
}

/// `1{D_k = w_k}`, i.e. customer `k` waits: `I_k <= J_{k-1}`.
pub fn wait_indicator_run(
    arrivals: &SeqWindow,
    services: &SeqWindow,
    policy: &BoundaryPolicy,
) -> Result<IndicatorWindow> {
    let out = run_queue(arrivals, services, policy)?;
    let o = out.sojourn.offset;
    let arr = arrivals.restrict(o, out.sojourn.end())?;
    let mut prev = out.sojourn_left;
    let values = arr
        .values
        .iter()
        .zip(&out.sojourn.values)
        .map(|(i, j)| {
            let wait = *i <= prev;
            prev = *j;
            wait
        })
        .collect();
    Ok(IndicatorWindow { offset: o, values })
}

/// Histogram of run lengths; `counts[n]` for `n < counts.len() - 1`, the
/// last bin collects everything longer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHistogram {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl RunHistogram {
    pub fn empirical(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|c| *c as f64 / self.total.max(1) as f64)
            .collect()
    }
}

/// Tallies runs `0..=max_n` with a tail bin for longer runs.
pub fn initial_run_statistics(runs: &[usize], max_n: usize) -> RunHistogram {
    let mut counts = vec![0u64; max_n + 2];
    for r in runs {
        counts[(*r).min(max_n + 1)] += 1;
    }
    RunHistogram {
        counts,
        total: runs.len() as u64,
    }
}

/// Starts `v + round((N + j s) (-u(rho)))`, `j = 0..starts`, from the far
/// corner `v = (0, 0)`.
pub fn run_starts(rho: f64, n: usize, starts: usize, spacing: usize) -> Result<Vec<Point>> {
    let d = direction_of_rho(rho)?;
    Ok((0..starts)
        .map(|j| {
            let r = (n + j * spacing) as f64;
            Point::new((-r * d.u.0).round() as i64, (-r * d.u.1).round() as i64)
        })
        .collect())
}

/// Initial `-e1` runs of Busemann geodesics from the starts of
/// [`run_starts`], all on one sampled lattice anchored at the origin.
/// Censored runs are returned as `None`.
pub fn initial_runs_from_lattice(
    rho: f64,
    n: usize,
    starts: usize,
    spacing: usize,
    rng: &RngSpec,
) -> Result<Vec<Option<usize>>> {
    if starts == 0 {
        return invalid("need at least one start");
    }
    let pts = run_starts(rho, n, starts, spacing)?;
    let far = pts[starts - 1];
    if far.x < 1 || far.y < 1 {
        return invalid(format!("starts for rho {rho} at N {n} touch the lattice boundary"));
    }
    let w = sample_exp_field(Point::new(0, 0), (far.y + 1) as usize, (far.x + 1) as usize, 1.0, rng);
    let g = lpp_grid(&w, Point::new(0, 0))?;
    pts.iter().map(|p| initial_west_run(&g, *p, usize::MAX)).collect()
}

/// Far corner and sites used by the `rho*` sampler: `sites` points spaced
/// `spacing` apart on the top row of a lattice tall and wide enough that
/// every grid corner fits.
pub fn rho_star_lattice(
    n: usize,
    sites: usize,
    spacing: usize,
    rho_min: f64,
    rho_max: f64,
) -> Result<(Point, usize, usize, Vec<Point>)> {
    let lo = direction_of_rho(rho_min)?;
    let hi = direction_of_rho(rho_max)?;
    let west = (n as f64 * -lo.u.0).round() as i64 + 1;
    let south = (n as f64 * -hi.u.1).round() as i64 + 1;
    let top = south;
    let pts: Vec<Point> = (0..sites)
        .map(|i| Point::new(west + (i * spacing) as i64, top))
        .collect();
    let cols = (pts.last().map_or(west, |p| p.x) + 1) as usize;
    Ok((Point::new(0, 0), (top + 1) as usize, cols, pts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpp::{backtrack_geodesic, lpp_grid_to};
    use proptest::prelude::*;

    fn field(rows: usize, cols: usize, seed: u64) -> WeightField {
        sample_exp_field(Point::new(0, 0), rows, cols, 1.0, &RngSpec::new(seed, "busemann-test"))
    }

    #[test]
    fn rho_two_is_the_diagonal() {
        let d = direction_of_rho(2.0).unwrap();
        assert_eq!(d.u, (-0.5, -0.5));
        assert!((rho_of_direction(-0.5, -0.5).unwrap().rho - 2.0).abs() < 1e-12);
        assert!(rho_of_direction(-1.0, 0.0).is_err());
        assert!(direction_of_rho(1.0).is_err());
    }

    #[test]
    fn direction_round_trip() {
        let mut s = RngSpec::new(3, "dir").stream();
        for _ in 0..100 {
            let rho = 1.0 + 30.0 * s.uniform();
            let d = direction_of_rho(rho).unwrap();
            assert!(((d.u.0 + d.u.1) + 1.0).abs() < 1e-12);
            let back = rho_of_direction(d.u.0, d.u.1).unwrap();
            assert!((back.rho - rho).abs() < 1e-12 * rho, "{rho} {}", back.rho);
        }
    }

    #[test]
    fn grid_shape() {
        let g = rho_grid();
        assert_eq!(g.len(), 64);
        assert!(g[0] > 1.05 && g[63] == 20.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn estimator_identities_and_monotonicity() {
        let rhos = [1.5, 2.0, 3.0, 4.0];
        let (w, est) = sample_busemann_level(0, -10, 10, &rhos, 120, &RngSpec::new(11, "est")).unwrap();
        assert!(est.recovery_error(&w) < 1e-9);
        assert_eq!(est.level(), Some(0));
        for r in 1..rhos.len() {
            for i in 0..est.sites.len() {
                assert!(est.horizontal[r][i] >= est.horizontal[r - 1][i] - 1e-9);
                assert!(est.vertical[r][i] <= est.vertical[r - 1][i] + 1e-9);
            }
        }
    }

    #[test]
    fn additivity_around_squares() {
        let w = field(60, 60, 4);
        let v = Point::new(0, 0);
        let g = lpp_grid(&w, v).unwrap();
        for x in 2..60 {
            for y in 2..60 {
                let p = Point::new(x, y);
                // B_{p-e1-e2, p} two ways
                let q = Point::new(x - 1, y - 1);
                let via_west = (g.value(p.west()) - g.value(q)) + (g.value(p) - g.value(p.west()));
                let via_south = (g.value(p.south()) - g.value(q)) + (g.value(p) - g.value(p.south()));
                assert!((via_west - via_south).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn window_too_close_is_rejected() {
        let w = field(100, 100, 1);
        // site north-east of the corner but closer than 0.4 N
        assert!(estimate_busemann_sites(&w, &[Point::new(20, 15)], Point::new(50, 50), &[2.0], 100).is_err());
        // site west of the corner
        assert!(estimate_busemann_level(&w, 50, 0, 60, &[2.0], 40).is_err());
        // corner outside the field
        assert!(estimate_busemann_level(&w, 99, 90, 95, &[2.0], 400).is_err());
        assert!(estimate_busemann_level(&w, 60, 50, 60, &[2.0], 40).is_ok());
    }

    #[test]
    fn busemann_geodesic_matches_backtrack() {
        let w = field(40, 50, 9);
        let g = lpp_grid(&w, Point::new(0, 0)).unwrap();
        for x in [
            Point::new(49, 39),
            Point::new(10, 30),
            Point::new(0, 5),
            Point::new(7, 0),
        ] {
            let a = busemann_geodesic(&g, x, usize::MAX).unwrap();
            assert_eq!(a, backtrack_geodesic(&g, x).unwrap());
        }
        let cut = busemann_geodesic(&g, Point::new(49, 39), 10).unwrap();
        assert!(cut.truncated && cut.steps.len() == 10);
    }

    #[test]
    fn geodesic_sum_identity() {
        let w = field(40, 40, 21);
        let g = lpp_grid(&w, Point::new(0, 0)).unwrap();
        let x = Point::new(39, 39);
        let path = busemann_geodesic(&g, x, 30).unwrap();
        let end = path.end();
        let incr: f64 = path.points().windows(2).map(|s| g.value(s[0]) - g.value(s[1])).sum();
        assert!((path_weight(&w, &path).unwrap() - (incr + w.at(end))).abs() < 1e-9);
    }

    #[test]
    fn coalescence_and_difference_identity() {
        let w = field(80, 80, 5);
        let g = lpp_grid(&w, Point::new(0, 0)).unwrap();
        let x = Point::new(60, 60);
        let y = Point::new(60, 61);
        let px = busemann_geodesic(&g, x, usize::MAX).unwrap();
        let py = busemann_geodesic(&g, y, usize::MAX).unwrap();
        assert_eq!(coalescence_point(&px, &px), Some(x));
        let z = coalescence_point(&px, &py).unwrap();
        let gz = lpp_grid(&w, z).unwrap();
        let lhs = g.value(y) - g.value(x);
        let rhs = gz.value(y) - gz.value(x);
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn disjoint_paths_have_no_coalescence() {
        let a = GeodesicPath {
            start: Point::new(0, 5),
            steps: vec![Step::West; 3],
            truncated: false,
        };
        let b = GeodesicPath {
            start: Point::new(0, 0),
            steps: vec![Step::West; 3],
            truncated: false,
        };
        assert_eq!(coalescence_point(&a, &b), None);
    }

    #[test]
    fn labels_match_two_backward_tables() {
        let w = field(30, 35, 8);
        let x = Point::new(30, 25);
        let lab = subtree_labels(&w, x).unwrap();
        let ta = lpp_grid_to(&w, x.west()).unwrap();
        let tb = lpp_grid_to(&w, x.south()).unwrap();
        for px in 0..=x.x {
            for py in 0..=x.y {
                let p = Point::new(px, py);
                if p == x {
                    assert_eq!(lab.label(p), None);
                    continue;
                }
                let a = if p.le(x.west()) { ta.value(p) } else { f64::NEG_INFINITY };
                let b = if p.le(x.south()) {
                    tb.value(p)
                } else {
                    f64::NEG_INFINITY
                };
                let want = if a > b { Subtree::West } else { Subtree::South };
                assert_eq!(lab.label(p), Some(want), "{p:?}");
            }
        }
    }

    #[test]
    fn interface_separates_subtrees() {
        let w = field(40, 40, 13);
        let x = Point::new(39, 39);
        let lab = subtree_labels(&w, x).unwrap();
        let path = competition_interface(&lab, usize::MAX);
        assert!(!path.truncated);
        // the last vertex may sit on the box edge with a neighbor outside
        for p in path.points() {
            assert_ne!(lab.label(p.west()), Some(Subtree::South));
            assert_ne!(lab.label(p.south()), Some(Subtree::West));
        }
        for p in &path.points()[..path.steps.len()] {
            assert_eq!(lab.label(p.west()), Some(Subtree::West));
            assert_eq!(lab.label(p.south()), Some(Subtree::South));
        }
        let first_q = Point::new(38, 38);
        let want = if lab.label(first_q) == Some(Subtree::West) {
            Step::South
        } else {
            Step::West
        };
        assert_eq!(path.steps[0], want);
        let cut = competition_interface(&lab, 3);
        assert!(cut.truncated && cut.steps.len() == 3);
    }

    #[test]
    fn rho_star_agrees_with_estimator() {
        let n = 60;
        let grid = rho_grid();
        let (origin, rows, cols, sites) = rho_star_lattice(n, 4, 7, grid[0], grid[63]).unwrap();
        let w = sample_exp_field(origin, rows, cols, 1.0, &RngSpec::new(2, "rs"));
        for x in sites {
            let lab = subtree_labels(&w, x).unwrap();
            let br = rho_star_bracket(&lab, &grid, n).unwrap();
            assert!(br.lower < br.upper);
            for &lam in &[1.25, 2.0, 4.0] {
                let est = estimate_busemann_sites(&w, &[x], x, &[lam], n).unwrap();
                let exceeds = rho_star_exceeds(&lab, lam, n).unwrap();
                assert_eq!(exceeds, est.horizontal[0][0] < est.vertical[0][0]);
            }
            // single crossing along the grid
            let flags: Vec<bool> = grid.iter().map(|r| rho_star_exceeds(&lab, *r, n).unwrap()).collect();
            assert!(flags.windows(2).all(|f| f[0] || !f[1]));
        }
    }

    #[test]
    fn wait_indicators_by_hand() {
        // I = 3,1,1,4 ; w = 2,2,2,1 ; J_left = 0
        // J = 2, 3, 4, 1 ; waits: I_k <= J_{k-1}: 3<=0 no, 1<=2 yes, 1<=3 yes, 4<=4 yes
        let i = SeqWindow::new(5, vec![3.0, 1.0, 1.0, 4.0]);
        let w = SeqWindow::new(5, vec![2.0, 2.0, 2.0, 1.0]);
        let ind = wait_indicator_run(&i, &w, &BoundaryPolicy::GivenJ(0.0)).unwrap();
        assert_eq!(ind.values, vec![false, true, true, true]);
        assert_eq!(ind.run_left(8), Some(3));
        assert_eq!(ind.run_left(5), Some(0));
        let all = IndicatorWindow {
            offset: 0,
            values: vec![true; 3],
        };
        assert_eq!(all.run_left(2), None);
    }

    #[test]
    fn histogram_tail_bin() {
        let h = initial_run_statistics(&[0, 0, 1, 5, 9], 3);
        assert_eq!(h.counts, vec![2, 1, 0, 0, 2]);
        assert_eq!(h.total, 5);
    }

    #[test]
    fn run_starts_follow_the_ray() {
        let s = run_starts(2.0, 100, 3, 10).unwrap();
        assert_eq!(s, vec![Point::new(50, 50), Point::new(55, 55), Point::new(60, 60)]);
        let runs = initial_runs_from_lattice(2.0, 100, 3, 10, &RngSpec::new(1, "runs")).unwrap();
        assert_eq!(runs.len(), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn recovery_on_any_table(seed in 0u64..10_000, rows in 3usize..25, cols in 3usize..25) {
            let w = field(rows, cols, seed);
            let g = lpp_grid(&w, Point::new(0, 0)).unwrap();
            for x in 1..cols as i64 {
                for y in 1..rows as i64 {
                    let p = Point::new(x, y);
                    let h = g.value(p) - g.value(p.west());
                    let v = g.value(p) - g.value(p.south());
                    prop_assert!((h.min(v) - w.at(p)).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn monotone_in_rho_for_shared_center(seed in 0u64..10_000, a in 1.1f64..6.0, b in 1.1f64..6.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let (_, est) = sample_busemann_level(0, -3, 3, &[lo, hi], 200, &RngSpec::new(seed, "mono")).unwrap();
            for i in 0..est.sites.len() {
                prop_assert!(est.horizontal[1][i] >= est.horizontal[0][i] - 1e-9);
                prop_assert!(est.vertical[1][i] <= est.vertical[0][i] + 1e-9);
            }
        }
    }
}
