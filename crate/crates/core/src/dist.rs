//! Finite-support probability vectors over the points of a [`CostSpace`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::CostSpace;

/// Largest deviation of the input sum from 1 that [`DiscreteDistribution::new`]
/// silently corrects.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-6;

/// Probability vector indexed by the points of one space.
///
/// Entries are non-negative, sum to 1 within `1e-9`, and the support is
/// non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    space: u64,
    mass: Vec<f64>,
}

/// Serialized form of a distribution file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDistribution {
    /// Path of the space file, resolved relative to the distribution file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<String>,
    pub mass: Vec<f64>,
}

impl DiscreteDistribution {
    /// Probability vector whose entries already sum to 1 within
    /// [`RENORMALIZE_TOLERANCE`]; the small residual is normalized away.
    pub fn new(space: &CostSpace, mass: Vec<f64>) -> Result<Self> {
        let sum = Self::check(space, &mass)?;
        if (sum - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {sum}, more than {RENORMALIZE_TOLERANCE} away from 1"
            )));
        }
        Ok(Self::normalized(space, mass, sum))
    }

    /// Normalizes arbitrary non-negative weights with a positive sum.
    pub fn from_weights(space: &CostSpace, weights: Vec<f64>) -> Result<Self> {
        let sum = Self::check(space, &weights)?;
        Ok(Self::normalized(space, weights, sum))
    }

    /// The point mass at `x`.
    pub fn point_mass(space: &CostSpace, x: usize) -> Result<Self> {
        if x >= space.len() {
            return Err(Error::InvalidDistribution(format!(
                "point {x} out of range for a space of {} points",
                space.len()
            )));
        }
        let mut mass = vec![0.0; space.len()];
        mass[x] = 1.0;
        Ok(Self {
            space: space.fingerprint(),
            mass,
        })
    }

    /// Uniform distribution over the given points (repeats add weight).
    pub fn uniform_on(space: &CostSpace, points: &[usize]) -> Result<Self> {
        let mut w = vec![0.0; space.len()];
        for &x in points {
            *w.get_mut(x).ok_or_else(|| {
                Error::InvalidDistribution(format!("point {x} out of range"))
            })? += 1.0;
        }
        Self::from_weights(space, w)
    }

    fn check(space: &CostSpace, mass: &[f64]) -> Result<f64> {
        if mass.len() != space.len() {
            return Err(Error::SpaceMismatch {
                left: mass.len(),
                right: space.len(),
            });
        }
        if let Some((i, v)) = mass
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} = {v} is negative or not finite"
            )));
        }
        let sum: f64 = mass.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidDistribution("masses sum to zero".into()));
        }
        Ok(sum)
    }

    fn normalized(space: &CostSpace, mut mass: Vec<f64>, sum: f64) -> Self {
        if sum != 1.0 {
            mass.iter_mut().for_each(|m| *m /= sum);
        }
        Self {
            space: space.fingerprint(),
            mass,
        }
    }

    /// Mass vector indexed by point.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Mass of point `x`.
    pub fn get(&self, x: usize) -> f64 {
        self.mass[x]
    }

    /// Number of points of the underlying space.
    pub fn len(&self) -> usize {
        self.mass.len()
    }

    /// Always false: a validated distribution has a non-empty support.
    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Points with positive mass, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.mass.len()).filter(|&x| self.mass[x] > 0.0).collect()
    }

    /// Fingerprint of the space this distribution lives on.
    pub fn space_fingerprint(&self) -> u64 {
        self.space
    }

    /// Errors unless `self` lives on `space`.
    pub fn check_space(&self, space: &CostSpace) -> Result<()> {
        if self.space != space.fingerprint() {
            return Err(Error::SpaceMismatch {
                left: self.len(),
                right: space.len(),
            });
        }
        Ok(())
    }

    /// Errors unless both distributions live on the same space.
    pub fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    /// Rebinds the distribution to another space with the same point count.
    pub fn rebind(&self, space: &CostSpace) -> Result<Self> {
        if self.len() != space.len() {
            return Err(Error::SpaceMismatch {
                left: self.len(),
                right: space.len(),
            });
        }
        Ok(Self {
            space: space.fingerprint(),
            mass: self.mass.clone(),
        })
    }

    /// Serialized form without the space path.
    pub fn to_raw(&self) -> RawDistribution {
        RawDistribution {
            space: None,
            mass: self.mass.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(n: usize) -> CostSpace {
        CostSpace::discrete(n, 1.0).unwrap()
    }

    #[test]
    fn new_normalizes_small_residual() {
        let d = DiscreteDistribution::new(&space(2), vec![0.5, 0.5 + 1e-8]).unwrap();
        assert!((d.mass().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn new_rejects_large_residual_and_zero_sum() {
        assert!(DiscreteDistribution::new(&space(2), vec![0.5, 0.6]).is_err());
        assert!(DiscreteDistribution::from_weights(&space(2), vec![0.0, 0.0]).is_err());
        assert!(DiscreteDistribution::from_weights(&space(2), vec![-1.0, 2.0]).is_err());
        assert!(DiscreteDistribution::from_weights(&space(2), vec![1.0]).is_err());
    }

    #[test]
    fn from_weights_normalizes() {
        let d = DiscreteDistribution::from_weights(&space(3), vec![1.0, 0.0, 3.0]).unwrap();
        assert_eq!(d.mass(), &[0.25, 0.0, 0.75]);
        assert_eq!(d.support(), vec![0, 2]);
    }

    #[test]
    fn mismatched_spaces_are_detected() {
        let a = DiscreteDistribution::point_mass(&space(3), 0).unwrap();
        let b = DiscreteDistribution::point_mass(&space(4), 0).unwrap();
        assert!(a.check_same_space(&b).is_err());
        assert!(a.check_space(&space(4)).is_err());
        assert!(a.check_space(&space(3)).is_ok());
        // The cost exponent is not part of the space identity.
        assert!(a.check_space(&CostSpace::discrete(3, 0.5).unwrap()).is_ok());
    }
}
