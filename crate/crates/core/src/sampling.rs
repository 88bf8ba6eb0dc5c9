//! Seeded sampling of jet points from a coordinate box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{Dims, JetPoint};

/// Per-coordinate ranges in canonical coordinate order (`t`, `x`, `v`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplingBox {
    dims: Dims,
    ranges: Vec<(f64, f64)>,
}

impl SamplingBox {
    /// The same `[lo, hi]` for every coordinate.
    pub fn uniform(dims: Dims, lo: f64, hi: f64) -> Result<Self> {
        Self::new(dims, vec![(lo, hi); dims.coord_count()])
    }

    pub fn new(dims: Dims, ranges: Vec<(f64, f64)>) -> Result<Self> {
        if ranges.len() != dims.coord_count() {
            return Err(Error::Dimension(format!(
                "sampling box needs {} ranges, got {}",
                dims.coord_count(),
                ranges.len()
            )));
        }
        if let Some((lo, hi)) = ranges.iter().find(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
            return Err(Error::Invalid(format!("degenerate sampling range [{lo}, {hi}]")));
        }
        Ok(SamplingBox { dims, ranges })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    pub fn sample(&self, rng: &mut impl Rng) -> JetPoint {
        let flat: Vec<f64> = self.ranges.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect();
        JetPoint::from_flat(self.dims, &flat)
    }

    /// Fresh velocities inside the box, keeping `(t, x)` of `pt`.
    pub fn redraw_velocity(&self, pt: &JetPoint, rng: &mut impl Rng) -> JetPoint {
        let off = self.dims.p + self.dims.n;
        let mut out = pt.clone();
        for (k, v) in out.v.iter_mut().enumerate() {
            let (lo, hi) = self.ranges[off + k];
            *v = rng.gen_range(lo..hi);
        }
        out
    }

    /// `k` points from a generator seeded with `seed`.
    pub fn samples(&self, k: usize, seed: u64) -> Vec<JetPoint> {
        let mut rng = rng(seed);
        (0..k).map(|_| self.sample(&mut rng)).collect()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        let d = Dims::new(2, 2).unwrap();
        let b = SamplingBox::uniform(d, -1.0, 1.0).unwrap();
        let a = b.samples(16, 7);
        assert_eq!(a, b.samples(16, 7));
        assert_ne!(a, b.samples(16, 8));
        assert!(a.iter().flat_map(|p| p.iter().copied().collect::<Vec<_>>()).all(|c| (-1.0..1.0).contains(&c)));
    }

    #[test]
    fn rejects_bad_ranges() {
        let d = Dims::new(1, 1).unwrap();
        assert!(SamplingBox::new(d, vec![(0.0, 1.0); 2]).is_err());
        assert!(SamplingBox::new(d, vec![(0.0, 1.0), (1.0, 1.0), (0.0, 1.0)]).is_err());
    }
}
