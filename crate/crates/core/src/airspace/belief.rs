use super::VerticalState;
use crate::{Error, Result};

const WEIGHT_TOL: f64 = 1e-9;

/// Finite set of weighted state samples.
///
/// Every constructor leaves the weights non-negative and summing to one
/// within 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    particles: Vec<(VerticalState, f64)>,
}

impl BeliefState {
    /// Accepts already-normalized particles.
    pub fn new(particles: Vec<(VerticalState, f64)>) -> Result<Self> {
        check_weights(&particles)?;
        let total: f64 = particles.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidBelief(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { particles })
    }

    /// Rescales positive weights to sum to one.
    pub fn from_unnormalized(particles: Vec<(VerticalState, f64)>) -> Result<Self> {
        check_weights(&particles)?;
        let total: f64 = particles.iter().map(|(_, w)| w).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidBelief(format!("total weight {total} cannot be normalized")));
        }
        let particles = particles.into_iter().map(|(s, w)| (s, w / total)).collect();
        Ok(Self { particles })
    }

    pub fn point_mass(state: VerticalState) -> Self {
        Self { particles: vec![(state, 1.0)] }
    }

    pub fn uniform(states: Vec<VerticalState>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidBelief("belief must contain at least one particle".into()));
        }
        let w = 1.0 / states.len() as f64;
        Ok(Self { particles: states.into_iter().map(|s| (s, w)).collect() })
    }

    pub fn particles(&self) -> &[(VerticalState, f64)] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        let total: f64 = self.particles.iter().map(|(_, w)| w).sum();
        !self.particles.is_empty() && self.particles.iter().all(|(_, w)| *w >= 0.0) && (total - 1.0).abs() <= WEIGHT_TOL
    }
}

fn check_weights(particles: &[(VerticalState, f64)]) -> Result<()> {
    if particles.is_empty() {
        return Err(Error::InvalidBelief("belief must contain at least one particle".into()));
    }
    if let Some((_, w)) = particles.iter().find(|(_, w)| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::InvalidBelief(format!("invalid particle weight {w}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airspace::Advisory;
    use proptest::prelude::*;

    fn st(h: f64) -> VerticalState {
        VerticalState::new(h, 0.0, 0.0, Advisory::Coc, 10)
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(BeliefState::new(vec![]).is_err());
        assert!(BeliefState::new(vec![(st(0.0), 0.5)]).is_err());
        assert!(BeliefState::new(vec![(st(0.0), 1.5), (st(1.0), -0.5)]).is_err());
        assert!(BeliefState::from_unnormalized(vec![(st(0.0), 0.0)]).is_err());
        assert!(BeliefState::uniform(vec![]).is_err());
    }

    proptest! {
        #[test]
        fn every_constructor_normalizes(ws in proptest::collection::vec(0.001f64..100.0, 1..40)) {
            let parts: Vec<_> = ws.iter().enumerate().map(|(i, w)| (st(i as f64), *w)).collect();
            let b = BeliefState::from_unnormalized(parts).unwrap();
            prop_assert!(b.is_normalized());
            let u = BeliefState::uniform(ws.iter().map(|w| st(*w)).collect()).unwrap();
            prop_assert!(u.is_normalized());
            prop_assert!(BeliefState::point_mass(st(3.0)).is_normalized());
        }
    }
}
