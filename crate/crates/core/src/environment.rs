//! Hidden environment model.
//!
//! The target sits at one of `G` goal nodes and never moves. Observations
//! take values in the same index set as the states and are only available
//! inside observation areas, where they report the true state with
//! probability `accuracy` and each wrong label with probability
//! `(1 - accuracy) / (G - 1)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Region};

pub const BELIEF_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvModel {
    pub goal_nodes: Vec<Point2>,
    pub observation_areas: Vec<Region>,
    pub accuracy: f64,
}

impl EnvModel {
    pub fn new(
        goal_nodes: Vec<Point2>,
        observation_areas: Vec<Region>,
        accuracy: f64,
    ) -> Result<Self> {
        let model = Self {
            goal_nodes,
            observation_areas,
            accuracy,
        };
        model.validate().map_err(Error::Validation)?;
        Ok(model)
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut errors = Vec::new();
        if self.goal_nodes.is_empty() {
            errors.push("at least one goal node is required".to_string());
        }
        if self.goal_nodes.iter().any(|g| !g.is_finite()) {
            errors.push("goal nodes must be finite".to_string());
        }
        if !(0.0..=1.0).contains(&self.accuracy) {
            errors.push(format!(
                "accuracy must lie in [0, 1], got {}",
                self.accuracy
            ));
        }
        for (i, a) in self.observation_areas.iter().enumerate() {
            if let Err(e) = a.validate() {
                errors.push(format!("observation area {i}: {e}"));
            }
        }
        for i in 0..self.observation_areas.len() {
            for j in i + 1..self.observation_areas.len() {
                if self.observation_areas[i].intersects(&self.observation_areas[j]) {
                    errors.push(format!(
                        "observation areas must be disjoint: areas {i} and {j} overlap"
                    ));
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    pub fn num_states(&self) -> usize {
        self.goal_nodes.len()
    }

    pub fn num_observations(&self) -> usize {
        self.goal_nodes.len()
    }

    pub fn num_areas(&self) -> usize {
        self.observation_areas.len()
    }

    /// Index of the observation area containing `x`, if any.
    pub fn area_at(&self, x: Point2) -> Option<usize> {
        self.observation_areas.iter().position(|a| a.contains(x))
    }

    /// `Z(e, o)` for a position inside some observation area.
    pub fn likelihood_in_area(&self, e: usize, o: usize) -> f64 {
        let g = self.num_states();
        if g == 1 {
            return 1.0;
        }
        if o == e {
            self.accuracy
        } else {
            (1.0 - self.accuracy) / (g - 1) as f64
        }
    }

    fn check_indices(&self, e: usize, o: usize) -> Result<()> {
        if e >= self.num_states() {
            return Err(Error::InvalidIndex(format!("state {e} out of range")));
        }
        if o >= self.num_observations() {
            return Err(Error::InvalidIndex(format!("observation {o} out of range")));
        }
        Ok(())
    }

    fn require_area(&self, x: Point2) -> Result<usize> {
        self.area_at(x)
            .ok_or(Error::NoObservationPossible { x: x.x, y: x.y })
    }

    pub fn observation_likelihood(&self, e: usize, o: usize, x: Point2) -> Result<f64> {
        self.check_indices(e, o)?;
        self.require_area(x)?;
        Ok(self.likelihood_in_area(e, o))
    }

    /// Diagonal observation matrix for observation `o` made at `x`.
    pub fn theta_matrix(&self, o: usize, x: Point2) -> Result<Theta> {
        if o >= self.num_observations() {
            return Err(Error::InvalidIndex(format!("observation {o} out of range")));
        }
        self.require_area(x)?;
        Ok(self.theta_in_area(o))
    }

    pub(crate) fn theta_in_area(&self, o: usize) -> Theta {
        Theta(
            (0..self.num_states())
                .map(|e| self.likelihood_in_area(e, o))
                .collect(),
        )
    }

    pub fn update_unnormalized(
        &self,
        v: &UnnormalizedBelief,
        o: usize,
        x: Point2,
    ) -> Result<UnnormalizedBelief> {
        let next = self.theta_matrix(o, x)?.apply(v);
        if next.mass() <= 0.0 {
            return Err(Error::ImpossibleObservation { observation: o });
        }
        Ok(next)
    }

    pub fn sample_observation<R: Rng + ?Sized>(
        &self,
        true_e: usize,
        x: Point2,
        rng: &mut R,
    ) -> Result<usize> {
        self.check_indices(true_e, 0)?;
        self.require_area(x)?;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let last = self.num_observations() - 1;
        for o in 0..last {
            acc += self.likelihood_in_area(true_e, o);
            if u < acc {
                return Ok(o);
            }
        }
        Ok(last)
    }
}

/// Diagonal of `Θ(o, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Theta(pub Vec<f64>);

impl Theta {
    pub fn diagonal(&self) -> &[f64] {
        &self.0
    }

    pub fn apply(&self, v: &UnnormalizedBelief) -> UnnormalizedBelief {
        UnnormalizedBelief(self.0.iter().zip(&v.0).map(|(t, w)| t * w).collect())
    }
}

/// Posterior distribution over environment states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BeliefVector(Vec<f64>);

impl BeliefVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Validation(vec!["belief must be nonempty".into()]));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Validation(vec![
                "belief entries must be nonnegative".into(),
            ]));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > BELIEF_SUM_TOLERANCE {
            return Err(Error::Validation(vec![format!(
                "belief must sum to 1 (sums to {sum})"
            )]));
        }
        Ok(Self(probs))
    }

    pub fn uniform(g: usize) -> Self {
        Self(vec![1.0 / g as f64; g])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_unnormalized(&self) -> UnnormalizedBelief {
        UnnormalizedBelief(self.0.clone())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (e, p) in self.0.iter().enumerate() {
            acc += p;
            if u < acc {
                return e;
            }
        }
        // rounding left a sliver above the cumulative sum
        self.0.iter().rposition(|p| *p > 0.0).unwrap_or(0)
    }
}

impl TryFrom<Vec<f64>> for BeliefVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        BeliefVector::new(v)
    }
}

impl From<BeliefVector> for Vec<f64> {
    fn from(b: BeliefVector) -> Self {
        b.0
    }
}

/// Branch weight: the joint probability of a state and the observation
/// history that led to the branch. Its mass is the probability of the
/// history itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnnormalizedBelief(pub Vec<f64>);

impl UnnormalizedBelief {
    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn mass(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|w| w * c).collect())
    }

    pub fn normalize(&self) -> Result<BeliefVector> {
        let mass = self.mass();
        if mass <= 0.0 || !mass.is_finite() {
            return Err(Error::ZeroBelief);
        }
        Ok(BeliefVector(self.0.iter().map(|w| w / mass).collect()))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| (a - b).abs() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn area() -> Region {
        Region::rect(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0))
    }

    fn model(g: usize, p: f64) -> EnvModel {
        let goals = (0..g).map(|i| Point2::new(i as f64, 5.0)).collect();
        EnvModel::new(goals, vec![area()], p).unwrap()
    }

    const IN: Point2 = Point2::new(0.5, 0.5);
    const OUT: Point2 = Point2::new(3.0, 3.0);

    #[test]
    fn likelihood_examples() {
        let m = model(2, 0.8);
        assert_eq!(m.observation_likelihood(0, 0, IN).unwrap(), 0.8);
        assert!((m.observation_likelihood(0, 1, IN).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(model(2, 1.0).observation_likelihood(1, 0, IN).unwrap(), 0.0);
        assert!(matches!(
            m.observation_likelihood(0, 0, OUT),
            Err(Error::NoObservationPossible { .. })
        ));
    }

    #[test]
    fn theta_examples() {
        let t = model(2, 0.8).theta_matrix(0, IN).unwrap();
        assert_eq!(t.diagonal()[0], 0.8);
        assert!((t.diagonal()[1] - 0.2).abs() < 1e-15);
        assert_eq!(model(2, 1.0).theta_matrix(1, IN).unwrap().0, vec![0.0, 1.0]);
        assert_eq!(
            model(3, 1.0).theta_matrix(2, IN).unwrap().0,
            vec![0.0, 0.0, 1.0]
        );
    }

    #[test]
    fn update_examples() {
        let m = model(2, 0.8);
        let v = UnnormalizedBelief(vec![0.5, 0.5]);
        let u = m.update_unnormalized(&v, 0, IN).unwrap();
        assert!((u.0[0] - 0.4).abs() < 1e-15 && (u.0[1] - 0.1).abs() < 1e-15);
        let u = m
            .update_unnormalized(&UnnormalizedBelief(vec![1.0, 0.0]), 0, IN)
            .unwrap();
        assert_eq!(u.0, vec![0.8, 0.0]);
        let u = model(2, 1.0).update_unnormalized(&v, 1, IN).unwrap();
        assert_eq!(u.0, vec![0.0, 0.5]);
        let e = model(2, 1.0).update_unnormalized(&UnnormalizedBelief(vec![1.0, 0.0]), 1, IN);
        assert!(matches!(
            e,
            Err(Error::ImpossibleObservation { observation: 1 })
        ));
    }

    #[test]
    fn normalize_examples() {
        let b = UnnormalizedBelief(vec![0.4, 0.1]).normalize().unwrap();
        assert!((b.probs()[0] - 0.8).abs() < 1e-15 && (b.probs()[1] - 0.2).abs() < 1e-15);
        assert_eq!(
            UnnormalizedBelief(vec![0.5, 0.5])
                .normalize()
                .unwrap()
                .probs(),
            &[0.5, 0.5]
        );
        assert_eq!(
            UnnormalizedBelief(vec![0.0, 0.5])
                .normalize()
                .unwrap()
                .probs(),
            &[0.0, 1.0]
        );
        assert!(matches!(
            UnnormalizedBelief(vec![0.0, 0.0]).normalize(),
            Err(Error::ZeroBelief)
        ));
    }

    #[test]
    fn belief_validation() {
        assert!(BeliefVector::new(vec![0.6, 0.6]).is_err());
        assert!(BeliefVector::new(vec![-0.5, 1.5]).is_err());
        assert!(BeliefVector::new(vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn overlapping_areas_rejected() {
        let areas = vec![area(), Region::disk(Point2::new(1.2, 0.5), 0.5)];
        let err = EnvModel::new(vec![Point2::new(0.0, 0.0)], areas, 0.8).unwrap_err();
        assert!(err
            .to_string()
            .contains("observation areas must be disjoint"));
    }

    fn frequency(m: &EnvModel, true_e: usize, o: usize, n: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hits = (0..n)
            .filter(|_| m.sample_observation(true_e, IN, &mut rng).unwrap() == o)
            .count();
        hits as f64 / n as f64
    }

    #[test]
    fn sampling_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noiseless = model(2, 1.0);
        assert!((0..1000).all(|_| noiseless.sample_observation(1, IN, &mut rng).unwrap() == 1));
        assert!((frequency(&model(2, 0.8), 0, 0, 100_000, 2) - 0.8).abs() < 0.01);
        let flat = model(2, 0.5);
        assert!((frequency(&flat, 0, 0, 100_000, 3) - 0.5).abs() < 0.01);
        assert!((frequency(&flat, 0, 1, 100_000, 4) - 0.5).abs() < 0.01);
        assert!(model(2, 0.8).sample_observation(0, OUT, &mut rng).is_err());
    }

    #[test]
    fn single_state_is_certain() {
        let m = model(1, 0.3);
        assert_eq!(m.observation_likelihood(0, 0, IN).unwrap(), 1.0);
    }

    fn weights(g: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0..1.0f64, g)
    }

    proptest! {
        #[test]
        fn likelihood_columns_sum_to_one(g in 1usize..6, p in 0.0..=1.0f64) {
            let m = model(g, p);
            for e in 0..g {
                let s: f64 = (0..g).map(|o| m.likelihood_in_area(e, o)).sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn branching_conserves_weight(w in weights(3), p in 0.0..=1.0f64) {
            let m = model(3, p);
            let v = UnnormalizedBelief(w);
            let mut total = [0.0; 3];
            for o in 0..3 {
                let child = m.theta_matrix(o, IN).unwrap().apply(&v);
                for (t, c) in total.iter_mut().zip(&child.0) { *t += c; }
            }
            for (t, w) in total.iter().zip(&v.0) { prop_assert!((t - w).abs() < 1e-12); }
        }

        #[test]
        fn update_commutes_with_scaling(w in weights(2), c in 0.01..10.0f64, p in 0.01..0.99f64, o in 0usize..2) {
            let m = model(2, p);
            let v = UnnormalizedBelief(w);
            let a = m.theta_matrix(o, IN).unwrap().apply(&v.scaled(c));
            let b = m.theta_matrix(o, IN).unwrap().apply(&v).scaled(c);
            prop_assert!(a.approx_eq(&b, 1e-12));
        }

        #[test]
        fn normalized_update_is_bayes_posterior(w in weights(3), p in 0.05..0.95f64, o in 0usize..3) {
            prop_assume!(w.iter().sum::<f64>() > 1e-6);
            let m = model(3, p);
            let v = UnnormalizedBelief(w.clone());
            let post = m.update_unnormalized(&v, o, IN).unwrap().normalize().unwrap();
            // P(e | o) from Bayes' rule with prior w / sum(w)
            let prior_mass: f64 = w.iter().sum();
            let lik = |e: usize| if e == o { p } else { (1.0 - p) / 2.0 };
            let evidence: f64 = (0..3).map(|e| lik(e) * w[e] / prior_mass).sum();
            for (e, we) in w.iter().enumerate() {
                let expected = lik(e) * (we / prior_mass) / evidence;
                prop_assert!((post.probs()[e] - expected).abs() < 1e-12);
            }
        }
    }
}
