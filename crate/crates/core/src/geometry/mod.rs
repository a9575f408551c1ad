//! Polygons, membership queries, fractional-indicator rasterization and
//! random polygon generation.

mod polygon;
mod random;
mod raster;
mod regions;

pub use polygon::{point_in_polygon, polygon_area, segments_intersect, BoundingBox, Point, Polygon};
pub use random::{random_polygon, random_polygon_with, random_polygons, RandomPolygonParams};
pub use raster::{
    rasterize, rasterize_exact, rasterize_fractional, Coverage, IndicatorField, DEFAULT_SUPERSAMPLE,
};
pub use regions::{parse_regions, read_regions, write_regions, Region};
