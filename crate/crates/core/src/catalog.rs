//! Built-in spacetimes.
//!
//! Each entry is an ordinary spacetime document compiled into the library.
//! Setting `CARTAN_FORGE_CATALOG_DIR` makes [`source`] prefer
//! `<dir>/<name>.st` when that file exists.

use crate::error::{Error, Result};
use crate::spacetime::{parse_spacetime_spec_with, SpacetimeSpec};
use std::collections::BTreeMap;

pub const CATALOG_DIR_ENV: &str = "CARTAN_FORGE_CATALOG_DIR";

const ENTRIES: &[(&str, &str)] = &[
    ("minkowski", include_str!("../catalog/minkowski.st")),
    ("rindler-chart", include_str!("../catalog/rindler-chart.st")),
    ("schwarzschild", include_str!("../catalog/schwarzschild.st")),
    ("flrw-power-law", include_str!("../catalog/flrw-power-law.st")),
    ("sphere2", include_str!("../catalog/sphere2.st")),
    ("sphere2-teleparallel", include_str!("../catalog/sphere2-teleparallel.st")),
    (
        "minkowski-antisymmetric-torsion",
        include_str!("../catalog/minkowski-antisymmetric-torsion.st"),
    ),
    ("minkowski-skew-torsion", include_str!("../catalog/minkowski-skew-torsion.st")),
];

pub fn names() -> Vec<&'static str> {
    ENTRIES.iter().map(|(k, _)| *k).collect()
}

/// Document text for a catalog entry.
pub fn source(name: &str) -> Result<String> {
    if let Ok(dir) = std::env::var(CATALOG_DIR_ENV) {
        let path = std::path::Path::new(&dir).join(format!("{name}.st"));
        if let Ok(text) = std::fs::read_to_string(&path) {
            return Ok(text);
        }
    }
    ENTRIES
        .iter()
        .find(|(k, _)| *k == name)
        .map(|(_, text)| text.to_string())
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown catalog spacetime `{name}` (available: {})",
                names().join(", ")
            ))
        })
}

pub fn load(name: &str) -> Result<SpacetimeSpec> {
    load_with(name, &BTreeMap::new())
}

pub fn load_with(name: &str, overrides: &BTreeMap<String, f64>) -> Result<SpacetimeSpec> {
    parse_spacetime_spec_with(&source(name)?, overrides)
}

/// A comfortable point inside the domain of each built-in entry.
pub fn reference_point(name: &str) -> Option<Vec<f64>> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    Some(match name {
        "minkowski" | "minkowski-antisymmetric-torsion" | "minkowski-skew-torsion" => vec![0.0; 4],
        "rindler-chart" => vec![0.0, 1.0, 0.0, 0.0],
        "schwarzschild" => vec![0.0, 6.0, half_pi, 0.0],
        "flrw-power-law" => vec![1.0, 0.0, 0.0, 0.0],
        "sphere2" | "sphere2-teleparallel" => vec![half_pi, 0.0],
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_parses_and_keeps_its_name() {
        for name in names() {
            let spec = load(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(spec.name, name);
        }
    }

    #[test]
    fn reference_points_are_in_domain() {
        for name in names() {
            let p = reference_point(name).unwrap();
            load(name).unwrap().eval_metric(&p).unwrap();
        }
    }

    #[test]
    fn unknown_entry() {
        assert!(matches!(load("nope"), Err(Error::InvalidArgument(_))));
    }
}
