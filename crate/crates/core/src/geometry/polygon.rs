use serde::{Deserialize, Serialize};

use crate::error::{FairError, Result};

/// A planar point in domain units.
pub type Point = [f64; 2];

/// Axis-aligned bounding box `[xmin, xmax] x [ymin, ymax]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn center(&self) -> Point {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
        ]
    }

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            min: [self.min[0].min(other.min[0]), self.min[1].min(other.min[1])],
            max: [self.max[0].max(other.max[0]), self.max[1].max(other.max[1])],
        }
    }

    /// Joint bounding box of a set of polygons; `None` when empty.
    pub fn of_polygons<'a>(polys: impl IntoIterator<Item = &'a Polygon>) -> Option<BoundingBox> {
        polys
            .into_iter()
            .map(Polygon::bounding_box)
            .reduce(|a, b| a.union(&b))
    }
}

/// Simple closed polygon without holes. The last vertex connects to the first.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    /// Validates vertex count, distinct consecutive vertices, simplicity and
    /// nonzero area.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(FairError::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(v) = vertices.iter().find(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(FairError::InvalidPolygon(format!("non-finite vertex {v:?}")));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(FairError::InvalidPolygon(format!(
                    "consecutive vertices {i} and {} coincide",
                    (i + 1) % n
                )));
            }
        }
        let poly = Polygon { vertices };
        if let Some((a, b)) = poly.first_self_intersection() {
            return Err(FairError::InvalidPolygon(format!(
                "edges {a} and {b} intersect"
            )));
        }
        if poly.signed_area() == 0.0 {
            return Err(FairError::InvalidPolygon("zero area".into()));
        }
        Ok(poly)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Iterator over edges `(v_i, v_{i+1})`, wrapping around.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace signed area; positive for counter-clockwise orientation.
    pub fn signed_area(&self) -> f64 {
        0.5 * self
            .edges()
            .map(|(a, b)| a[0] * b[1] - b[0] * a[1])
            .sum::<f64>()
    }

    /// Absolute shoelace area.
    pub fn area(&self) -> Result<f64> {
        let a = self.signed_area().abs();
        if a == 0.0 {
            return Err(FairError::InvalidPolygon("zero area".into()));
        }
        Ok(a)
    }

    pub fn bounding_box(&self) -> BoundingBox {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for k in 0..2 {
                min[k] = min[k].min(v[k]);
                max[k] = max[k].max(v[k]);
            }
        }
        BoundingBox { min, max }
    }

    /// Even-odd membership with a half-open rule: a point on a left or bottom
    /// edge is inside, on a right or top edge outside. Abutting polygons
    /// therefore never both claim the same point.
    pub fn contains(&self, pt: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if let Some(x) = crossing_x(a, b, pt[1]) {
                if pt[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Translated copy.
    pub fn translated(&self, by: Point) -> Polygon {
        Polygon {
            vertices: self
                .vertices
                .iter()
                .map(|v| [v[0] + by[0], v[1] + by[1]])
                .collect(),
        }
    }

    fn first_self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.vertices.len();
        let edges: Vec<(Point, Point)> = self.edges().collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // Adjacent edges share exactly one vertex; they may only
                    // overlap if they fold back onto each other.
                    if n == 3 {
                        continue;
                    }
                    let (p, q) = if j == i + 1 {
                        (edges[i], edges[j])
                    } else {
                        (edges[j], edges[i])
                    };
                    if folds_back(p.0, p.1, q.1) {
                        return Some((i, j));
                    }
                    continue;
                }
                if segments_intersect(edges[i].0, edges[i].1, edges[j].0, edges[j].1) {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

impl<'de> Deserialize<'de> for Polygon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let vertices = Vec::<Point>::deserialize(d)?;
        Polygon::new(vertices).map_err(serde::de::Error::custom)
    }
}

/// X-coordinate where edge `a -> b` crosses the horizontal line `y`, using
/// the half-open rule `(a.y > y) != (b.y > y)`. Shared by point queries and
/// the rasterizer so both classify identically.
#[inline]
pub(crate) fn crossing_x(a: Point, b: Point, y: f64) -> Option<f64> {
    if (a[1] > y) != (b[1] > y) {
        Some((b[0] - a[0]) * (y - a[1]) / (b[1] - a[1]) + a[0])
    } else {
        None
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test, touching endpoints included.
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

// a -> b -> c with c lying back along segment a-b.
fn folds_back(a: Point, b: Point, c: Point) -> bool {
    if orient(a, b, c) != 0.0 {
        return false;
    }
    let ab = [b[0] - a[0], b[1] - a[1]];
    let bc = [c[0] - b[0], c[1] - b[1]];
    ab[0] * bc[0] + ab[1] * bc[1] < 0.0
}

/// Free-function form of [`Polygon::contains`].
pub fn point_in_polygon(poly: &Polygon, pt: Point) -> bool {
    poly.contains(pt)
}

/// Free-function form of [`Polygon::area`].
pub fn polygon_area(poly: &Polygon) -> Result<f64> {
    poly.area()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Polygon {
        Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    fn l_shape() -> Polygon {
        Polygon::new(vec![
            [0.0, 0.0],
            [2.0, 0.0],
            [2.0, 1.0],
            [1.0, 1.0],
            [1.0, 2.0],
            [0.0, 2.0],
        ])
        .unwrap()
    }

    // Winding number, independent of the crossing-parity code path.
    fn winding_number(poly: &Polygon, p: Point) -> i32 {
        let mut wn = 0;
        for (a, b) in poly.edges() {
            if a[1] <= p[1] {
                if b[1] > p[1] && orient(a, b, p) > 0.0 {
                    wn += 1;
                }
            } else if b[1] <= p[1] && orient(a, b, p) < 0.0 {
                wn -= 1;
            }
        }
        wn
    }

    #[test]
    fn areas() {
        assert_eq!(unit_square().area().unwrap(), 1.0);
        let tri = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(tri.area().unwrap(), 0.5);
        let hex: Vec<Point> = (0..6)
            .map(|k| {
                let a = k as f64 * std::f64::consts::PI / 3.0;
                [a.cos(), a.sin()]
            })
            .collect();
        let hex = Polygon::new(hex).unwrap();
        assert!((hex.area().unwrap() - 3.0 * 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((hex.area().unwrap() - 2.598076).abs() < 1e-6);
    }

    #[test]
    fn clockwise_area_is_positive() {
        let cw = Polygon::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(cw.signed_area() < 0.0);
        assert_eq!(cw.area().unwrap(), 1.0);
    }

    #[test]
    fn rejects_invalid() {
        assert!(Polygon::new(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        assert!(Polygon::new(vec![[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).is_err());
        // bow tie
        assert!(Polygon::new(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).is_err());
        // collinear
        assert!(Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
        // spike folding back on itself
        assert!(
            Polygon::new(vec![[0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [1.0, 1.0]]).is_err()
        );
    }

    #[test]
    fn membership() {
        let sq = unit_square();
        assert!(point_in_polygon(&sq, [0.5, 0.5]));
        assert!(!point_in_polygon(&sq, [2.0, 2.0]));
        assert!(!point_in_polygon(&l_shape(), [1.5, 1.5]));
        assert!(point_in_polygon(&l_shape(), [0.5, 1.5]));
    }

    #[test]
    fn half_open_boundary() {
        let sq = unit_square();
        assert!(sq.contains([0.0, 0.5]));
        assert!(sq.contains([0.5, 0.0]));
        assert!(sq.contains([0.0, 0.0]));
        assert!(!sq.contains([1.0, 0.5]));
        assert!(!sq.contains([0.5, 1.0]));
        // Two abutting squares claim a shared edge point exactly once.
        let right = sq.translated([1.0, 0.0]);
        for y in [0.0, 0.25, 0.5, 0.75] {
            let p = [1.0, y];
            assert_eq!(sq.contains(p) as u8 + right.contains(p) as u8, 1);
        }
    }

    #[test]
    fn agrees_with_winding_number() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for poly in [unit_square(), l_shape()] {
            for _ in 0..10_000 {
                let p = [rng.gen_range(-0.5..2.5), rng.gen_range(-0.5..2.5)];
                assert_eq!(poly.contains(p), winding_number(&poly, p) != 0, "{p:?}");
            }
        }
    }

    #[test]
    fn deserializes_with_validation() {
        let p: Polygon = serde_json::from_str("[[0,0],[1,0],[0,1]]").unwrap();
        assert_eq!(p.len(), 3);
        assert!(serde_json::from_str::<Polygon>("[[0,0],[1,0]]").is_err());
    }
}
