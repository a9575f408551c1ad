use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FairError, Result};

use super::polygon::{Point, Polygon};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomPolygonParams {
    pub min_vertices: usize,
    pub max_vertices: usize,
    pub mean_radius: f64,
    /// Relative radius jitter in `[0, 1)`.
    pub irregularity: f64,
}

impl Default for RandomPolygonParams {
    fn default() -> Self {
        RandomPolygonParams {
            min_vertices: 3,
            max_vertices: 12,
            mean_radius: 0.75,
            irregularity: 0.3,
        }
    }
}

impl RandomPolygonParams {
    fn validate(&self) -> Result<()> {
        if self.min_vertices < 3 || self.max_vertices < self.min_vertices {
            return Err(FairError::param(format!(
                "vertex bounds must satisfy 3 <= min <= max, got [{}, {}]",
                self.min_vertices, self.max_vertices
            )));
        }
        if !(self.mean_radius > 0.0 && self.mean_radius.is_finite()) {
            return Err(FairError::param("mean_radius must be > 0"));
        }
        if !(0.0..1.0).contains(&self.irregularity) {
            return Err(FairError::param("irregularity must lie in [0, 1)"));
        }
        Ok(())
    }
}

// Each vertex angle falls in the middle part of its own sector, so angular
// gaps stay below pi even for triangles and the center stays inside.
const SECTOR_JITTER: (f64, f64) = (0.3, 0.7);

/// Star-shaped random polygon around `center`. Strictly increasing vertex
/// angles with gaps below pi make the result simple and keep `center` in
/// its interior.
pub fn random_polygon(seed: u64, center: Point, params: &RandomPolygonParams) -> Result<Polygon> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_polygon_with(&mut rng, center, params)
}

/// As [`random_polygon`], drawing from a caller-provided generator.
pub fn random_polygon_with<R: Rng>(
    rng: &mut R,
    center: Point,
    params: &RandomPolygonParams,
) -> Result<Polygon> {
    params.validate()?;
    let n = rng.gen_range(params.min_vertices..=params.max_vertices);
    let phase = rng.gen_range(0.0..TAU);
    let sector = TAU / n as f64;
    let vertices = (0..n)
        .map(|k| {
            let angle = phase + (k as f64 + rng.gen_range(SECTOR_JITTER.0..SECTOR_JITTER.1)) * sector;
            let irr = params.irregularity;
            let r = params.mean_radius * rng.gen_range((1.0 - irr)..=(1.0 + irr));
            [center[0] + r * angle.cos(), center[1] + r * angle.sin()]
        })
        .collect();
    Polygon::new(vertices)
}

/// `count` polygons with centers uniform in `[lo, hi]^2` and mean radius
/// uniform in `radius`.
pub fn random_polygons(
    seed: u64,
    count: usize,
    center_range: (f64, f64),
    radius: (f64, f64),
    params: &RandomPolygonParams,
) -> Result<Vec<Polygon>> {
    if !(radius.0 > 0.0 && radius.1 >= radius.0) {
        return Err(FairError::param(format!("invalid radius range {radius:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let c = [
                rng.gen_range(center_range.0..=center_range.1),
                rng.gen_range(center_range.0..=center_range.1),
            ];
            let p = RandomPolygonParams {
                mean_radius: rng.gen_range(radius.0..=radius.1),
                ..*params
            };
            random_polygon_with(&mut rng, c, &p)
        })
        .collect()
}
