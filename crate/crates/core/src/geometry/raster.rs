use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{FairError, Result};
use crate::fourier::RegularGrid;

use super::polygon::{crossing_x, Point, Polygon};

/// Default subcells per cell axis used when estimating coverage fractions.
pub const DEFAULT_SUPERSAMPLE: usize = 4;

/// How boundary cells get their covered fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "CoverageRepr", into = "CoverageRepr")]
pub enum Coverage {
    /// Area of the polygon clipped to the cell.
    #[default]
    Exact,
    /// Share of `n x n` subcell centers inside the polygon.
    Supersample(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoverageRepr {
    Count(usize),
    Name(String),
}

impl From<Coverage> for CoverageRepr {
    fn from(c: Coverage) -> Self {
        match c {
            Coverage::Exact => CoverageRepr::Name("exact".into()),
            Coverage::Supersample(n) => CoverageRepr::Count(n),
        }
    }
}

impl TryFrom<CoverageRepr> for Coverage {
    type Error = String;

    fn try_from(r: CoverageRepr) -> std::result::Result<Self, String> {
        match r {
            CoverageRepr::Count(n) => Coverage::supersample(n).map_err(|e| e.to_string()),
            CoverageRepr::Name(s) => s.parse(),
        }
    }
}

impl Coverage {
    pub fn supersample(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(FairError::param("supersample must be >= 1"));
        }
        Ok(Coverage::Supersample(n))
    }
}

impl FromStr for Coverage {
    type Err = String;

    /// `exact` or a subcell count per axis.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "exact" => Ok(Coverage::Exact),
            other => match other.parse::<usize>() {
                Ok(n) if n >= 1 => Ok(Coverage::Supersample(n)),
                _ => Err(format!("coverage must be `exact` or a count >= 1, got `{other}`")),
            },
        }
    }
}

impl fmt::Display for Coverage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coverage::Exact => f.write_str("exact"),
            Coverage::Supersample(n) => write!(f, "{n}"),
        }
    }
}

/// Fractional indicator of a region sampled on a grid: each cell holds the
/// fraction of its area inside the region. Only a window around the region
/// is stored; every cell outside it is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorField {
    grid: RegularGrid,
    i0: usize,
    j0: usize,
    wi: usize,
    wj: usize,
    values: Vec<f64>,
}

impl IndicatorField {
    /// Builds a field from a dense row-major array (`j` fastest).
    pub fn from_dense(grid: RegularGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(FairError::mismatch(grid.len(), values.len()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(FairError::param(format!("indicator value {v} outside [0, 1]")));
        }
        Ok(IndicatorField {
            grid,
            i0: 0,
            j0: 0,
            wi: grid.nx(),
            wj: grid.ny(),
            values,
        })
    }

    pub fn grid(&self) -> &RegularGrid {
        &self.grid
    }

    /// `(i0, j0, width_i, width_j)` of the stored window.
    pub fn window(&self) -> (usize, usize, usize, usize) {
        (self.i0, self.j0, self.wi, self.wj)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i < self.i0 || j < self.j0 || i >= self.i0 + self.wi || j >= self.j0 + self.wj {
            return 0.0;
        }
        self.values[(i - self.i0) * self.wj + (j - self.j0)]
    }

    /// Nonzero cells as `(i, j, value)`.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.values.iter().enumerate().filter_map(move |(k, &v)| {
            (v != 0.0).then(|| (self.i0 + k / self.wj, self.j0 + k % self.wj, v))
        })
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `sum(values) * Delta`.
    pub fn discrete_area(&self) -> f64 {
        self.sum() * self.grid.cell_area()
    }

    /// Dense row-major copy over the whole grid.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        self.scatter_into(&mut out, 1.0);
        out
    }

    /// `out[k] += weight * value[k]` over the whole grid.
    pub fn scatter_into(&self, out: &mut [f64], weight: f64) {
        let ny = self.grid.ny();
        for a in 0..self.wi {
            let row = &self.values[a * self.wj..(a + 1) * self.wj];
            let base = (self.i0 + a) * ny + self.j0;
            for (o, v) in out[base..base + self.wj].iter_mut().zip(row) {
                *o += weight * v;
            }
        }
    }
}

/// Estimates each cell's covered fraction from `supersample^2` subcell
/// centers. Cells no edge passes through come out exactly 0 or 1, and with
/// `supersample == 1` the field is the membership indicator of cell centers
/// under [`Polygon::contains`].
pub fn rasterize_fractional(
    poly: &Polygon,
    grid: &RegularGrid,
    supersample: usize,
) -> Result<IndicatorField> {
    if supersample == 0 {
        return Err(FairError::param("supersample must be >= 1"));
    }
    let (i0, j0, wi, wj) = window(poly, grid)?;
    let (i1, j1) = (i0 + wi - 1, j0 + wj - 1);
    let [ox, oy] = grid.origin();
    let (dx, dy) = (grid.dx(), grid.dy());

    let s = supersample;
    let sdx = dx / s as f64;
    let sdy = dy / s as f64;
    let sub_x = |q: i64| ox + (q as f64 + 0.5) * sdx;
    let q_min = (i0 * s) as i64;
    let q_max = ((i1 + 1) * s) as i64 - 1;

    let mut counts = vec![0u32; wi * wj];
    let mut crossings: Vec<f64> = Vec::with_capacity(poly.len());
    let edges: Vec<_> = poly.edges().collect();

    for j in j0..=j1 {
        for b in 0..s {
            let y = oy + ((j * s + b) as f64 + 0.5) * sdy;
            crossings.clear();
            crossings.extend(edges.iter().filter_map(|&(p, q)| crossing_x(p, q, y)));
            if crossings.is_empty() {
                continue;
            }
            crossings.sort_by(f64::total_cmp);
            debug_assert!(crossings.len() % 2 == 0);
            for pair in crossings.chunks_exact(2) {
                let (lo, hi) = (pair[0], pair[1]);
                // first subcolumn with center >= lo
                let mut qa = (((lo - ox) / sdx) - 0.5).ceil() as i64;
                while qa > q_min && sub_x(qa - 1) >= lo {
                    qa -= 1;
                }
                while sub_x(qa) < lo {
                    qa += 1;
                }
                // last subcolumn with center < hi
                let mut qb = (((hi - ox) / sdx) - 0.5).ceil() as i64 - 1;
                while qb < q_max && sub_x(qb + 1) < hi {
                    qb += 1;
                }
                while qb >= qa && sub_x(qb) >= hi {
                    qb -= 1;
                }
                let (qa, qb) = (qa.max(q_min), qb.min(q_max));
                if qb < qa {
                    continue;
                }
                add_run(&mut counts, wj, j - j0, i0, s, qa as usize, qb as usize);
            }
        }
    }

    let norm = 1.0 / (s * s) as f64;
    let full = (s * s) as u32;
    let values = counts
        .into_iter()
        .map(|c| if c == full { 1.0 } else { c as f64 * norm })
        .collect();
    Ok(IndicatorField {
        grid: *grid,
        i0,
        j0,
        wi,
        wj,
        values,
    })
}

// Cells of `grid` that can touch `poly`, with one cell of margin.
fn window(poly: &Polygon, grid: &RegularGrid) -> Result<(usize, usize, usize, usize)> {
    let bb = poly.bounding_box();
    let gb = grid.bounds();
    let overflow = [
        (gb.min[0] - bb.min[0]).max(0.0),
        (bb.max[0] - gb.max[0]).max(0.0),
        (gb.min[1] - bb.min[1]).max(0.0),
        (bb.max[1] - gb.max[1]).max(0.0),
    ];
    if overflow.iter().any(|&o| o > 0.0) {
        return Err(FairError::OutsideGrid { overflow });
    }

    let [ox, oy] = grid.origin();
    let (dx, dy) = (grid.dx(), grid.dy());
    let cell_lo = |v: f64, o: f64, d: f64| ((v - o) / d).floor() as i64 - 1;
    let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;
    let i0 = clamp(cell_lo(bb.min[0], ox, dx), grid.nx());
    let i1 = clamp(cell_lo(bb.max[0], ox, dx) + 2, grid.nx());
    let j0 = clamp(cell_lo(bb.min[1], oy, dy), grid.ny());
    let j1 = clamp(cell_lo(bb.max[1], oy, dy) + 2, grid.ny());
    let (wi, wj) = (i1 - i0 + 1, j1 - j0 + 1);
    Ok((i0, j0, wi, wj))
}

pub fn rasterize(poly: &Polygon, grid: &RegularGrid, coverage: Coverage) -> Result<IndicatorField> {
    match coverage {
        Coverage::Exact => rasterize_exact(poly, grid),
        Coverage::Supersample(n) => rasterize_fractional(poly, grid, n),
    }
}

/// Exact covered fraction of every cell, by clipping the polygon to each
/// column strip and then to each cell of the strip.
pub fn rasterize_exact(poly: &Polygon, grid: &RegularGrid) -> Result<IndicatorField> {
    let (i0, j0, wi, wj) = window(poly, grid)?;
    let [ox, oy] = grid.origin();
    let (dx, dy) = (grid.dx(), grid.dy());
    let cell_area = dx * dy;
    let mut values = vec![0.0; wi * wj];
    let mut strip = Vec::with_capacity(poly.len() + 4);
    let mut cell = Vec::with_capacity(poly.len() + 8);
    let mut tmp = Vec::with_capacity(poly.len() + 8);
    for a in 0..wi {
        let x_lo = ox + (i0 + a) as f64 * dx;
        let x_hi = x_lo + dx;
        tmp.clear();
        clip(poly.vertices(), &mut tmp, 0, x_lo, true);
        strip.clear();
        clip(&tmp, &mut strip, 0, x_hi, false);
        if strip.len() < 3 {
            continue;
        }
        let (y_min, y_max) = strip
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[1]), hi.max(p[1])));
        let b_lo = (((y_min - oy) / dy).floor() as i64 - j0 as i64).max(0) as usize;
        let b_hi = (((y_max - oy) / dy).floor() as i64 - j0 as i64).min(wj as i64 - 1);
        for b in b_lo..=b_hi.max(0) as usize {
            let y_lo = oy + (j0 + b) as f64 * dy;
            let y_hi = y_lo + dy;
            tmp.clear();
            clip(&strip, &mut tmp, 1, y_lo, true);
            cell.clear();
            clip(&tmp, &mut cell, 1, y_hi, false);
            let f = (shoelace(&cell) / cell_area).clamp(0.0, 1.0);
            values[a * wj + b] = if f > 1.0 - 1e-12 { 1.0 } else { f };
        }
    }
    Ok(IndicatorField {
        grid: *grid,
        i0,
        j0,
        wi,
        wj,
        values,
    })
}

// Keeps the part of `input` on one side of the line `p[axis] == at`:
// `p[axis] >= at` when `above`, else `p[axis] <= at`.
fn clip(input: &[Point], out: &mut Vec<Point>, axis: usize, at: f64, above: bool) {
    let dist = |p: &Point| if above { p[axis] - at } else { at - p[axis] };
    let n = input.len();
    for k in 0..n {
        let (p, q) = (input[k], input[(k + 1) % n]);
        let (dp, dq) = (dist(&p), dist(&q));
        if dp >= 0.0 {
            out.push(p);
        }
        if (dp >= 0.0) != (dq >= 0.0) {
            let t = dp / (dp - dq);
            let other = 1 - axis;
            let mut x = [0.0; 2];
            x[axis] = at;
            x[other] = p[other] + t * (q[other] - p[other]);
            out.push(x);
        }
    }
}

fn shoelace(pts: &[Point]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    let s: f64 = (0..n)
        .map(|k| {
            let (p, q) = (pts[k], pts[(k + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum();
    0.5 * s.abs()
}

// Adds one hit per subcolumn in [qa, qb] to the owning cells of window row `jr`.
fn add_run(counts: &mut [u32], wj: usize, jr: usize, i0: usize, s: usize, qa: usize, qb: usize) {
    let (ca, cb) = (qa / s, qb / s);
    let idx = |cell: usize| (cell - i0) * wj + jr;
    if ca == cb {
        counts[idx(ca)] += (qb - qa + 1) as u32;
        return;
    }
    counts[idx(ca)] += ((ca + 1) * s - qa) as u32;
    for c in ca + 1..cb {
        counts[idx(c)] += s as u32;
    }
    counts[idx(cb)] += (qb - cb * s + 1) as u32;
}
