//! Synthetic classification sets on a 20 x 20 integer grid.

use rand::Rng;

use crate::dataset::Dataset;
use crate::error::Result;
use crate::rng::stream_rng;

pub const GRID: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdhocShape {
    /// 1 iff x0 + x1 >= 20.
    Separable,
    /// Checkerboard parity of x0 + x1.
    Alternating,
    /// Bernoulli(0.5) per point from the seed.
    Random,
    /// 1 inside the radius-6 disc centered at (9.5, 9.5).
    Circle,
}

impl std::str::FromStr for AdhocShape {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "separable" => Ok(AdhocShape::Separable),
            "alternating" => Ok(AdhocShape::Alternating),
            "random" => Ok(AdhocShape::Random),
            "circle" => Ok(AdhocShape::Circle),
            other => Err(format!("unknown shape {other:?}")),
        }
    }
}

/// All 400 grid points (x0, x1) in {0..19}^2, labeled by the shape rule.
/// Only `Random` consumes the seed.
pub fn gen_adhoc(shape: AdhocShape, seed: u64) -> Result<Dataset> {
    let mut rng = stream_rng(seed, 0xadc, 0);
    let mut rows = Vec::with_capacity(GRID * GRID);
    let mut labels = Vec::with_capacity(GRID * GRID);
    for x0 in 0..GRID {
        for x1 in 0..GRID {
            let label = match shape {
                AdhocShape::Separable => i32::from(x0 + x1 >= GRID),
                AdhocShape::Alternating => ((x0 + x1) % 2) as i32,
                AdhocShape::Random => i32::from(rng.gen::<bool>()),
                AdhocShape::Circle => {
                    let dx = x0 as f64 - 9.5;
                    let dy = x1 as f64 - 9.5;
                    i32::from(dx * dx + dy * dy <= 36.0)
                }
            };
            rows.push(vec![x0 as f64, x1 as f64]);
            labels.push(label);
        }
    }
    let name = match shape {
        AdhocShape::Separable => "adhoc-separable",
        AdhocShape::Alternating => "adhoc-alternating",
        AdhocShape::Random => "adhoc-random",
        AdhocShape::Circle => "adhoc-circle",
    };
    Dataset::from_rows(name, rows, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class_counts(ds: &Dataset) -> (usize, usize) {
        let ones = ds.labels.iter().filter(|&&l| l == 1).count();
        (ds.n() - ones, ones)
    }

    #[test]
    fn alternating_is_balanced() {
        let ds = gen_adhoc(AdhocShape::Alternating, 0).unwrap();
        assert_eq!(ds.n(), 400);
        assert_eq!(class_counts(&ds), (200, 200));
    }

    #[test]
    fn separable_class_sizes() {
        // pairs with sum <= 19 number 1 + 2 + ... + 20 = 210
        let ds = gen_adhoc(AdhocShape::Separable, 0).unwrap();
        assert_eq!(class_counts(&ds), (210, 190));
    }

    #[test]
    fn circle_lattice_count() {
        // 112 lattice points inside the disc; majority fraction 72.0%
        let ds = gen_adhoc(AdhocShape::Circle, 0).unwrap();
        let (outside, inside) = class_counts(&ds);
        assert_eq!(inside, 112);
        assert_eq!(outside, 288);
        assert!((outside as f64 / 400.0 - 0.72).abs() < 1e-12);
    }

    #[test]
    fn random_is_seeded() {
        let a = gen_adhoc(AdhocShape::Random, 5).unwrap();
        let b = gen_adhoc(AdhocShape::Random, 5).unwrap();
        let c = gen_adhoc(AdhocShape::Random, 6).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_ne!(a.labels, c.labels);
    }

    #[test]
    fn deterministic_shapes_ignore_seed() {
        for shape in [AdhocShape::Separable, AdhocShape::Alternating, AdhocShape::Circle] {
            let a = gen_adhoc(shape, 1).unwrap();
            let b = gen_adhoc(shape, 999).unwrap();
            assert_eq!(a.labels, b.labels);
        }
    }
}
