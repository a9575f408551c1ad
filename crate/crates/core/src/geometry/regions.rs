use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FairError, Result};

use super::polygon::Polygon;

/// One entry of a regions file: `{"id": "...", "vertices": [[x, y], ...], "value": 1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub id: String,
    pub vertices: Polygon,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

pub fn parse_regions(json: &str) -> serde_json::Result<Vec<Region>> {
    serde_json::from_str(json)
}

pub fn read_regions(path: impl AsRef<Path>) -> Result<Vec<Region>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| FairError::io(path, e))?;
    let regions = parse_regions(&text).map_err(|e| FairError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if regions.is_empty() {
        return Err(FairError::Format {
            path: path.to_path_buf(),
            message: "no regions".into(),
        });
    }
    let mut ids: Vec<&str> = regions.iter().map(|r| r.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(FairError::Format {
            path: path.to_path_buf(),
            message: format!("duplicate region id {:?}", w[0]),
        });
    }
    Ok(regions)
}

pub fn write_regions(path: impl AsRef<Path>, regions: &[Region]) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(regions)?;
    fs::write(path, text).map_err(|e| FairError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_optional_value() {
        let r = parse_regions(
            r#"[{"id": "a", "vertices": [[0,0],[1,0],[0,1]], "value": 2.5},
                {"id": "b", "vertices": [[0,0],[1,0],[1,1],[0,1]]}]"#,
        )
        .unwrap();
        assert_eq!(r[0].value, Some(2.5));
        assert_eq!(r[1].value, None);
        assert_eq!(r[1].vertices.len(), 4);
    }

    #[test]
    fn rejects_bad_geometry_and_duplicates() {
        assert!(parse_regions(r#"[{"id": "a", "vertices": [[0,0],[1,1],[1,0],[0,1]]}]"#).is_err());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        fs::write(
            &p,
            r#"[{"id":"a","vertices":[[0,0],[1,0],[0,1]]},{"id":"a","vertices":[[0,0],[1,0],[0,1]]}]"#,
        )
        .unwrap();
        assert!(read_regions(&p).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        let regions = vec![Region {
            id: "x".into(),
            vertices: Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.75]]).unwrap(),
            value: Some(-1.25),
        }];
        write_regions(&p, &regions).unwrap();
        assert_eq!(read_regions(&p).unwrap(), regions);
    }
}
