use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{structural, Result};

/// Norm attached to a point or direction.
///
/// The weighted variants carry the cell volumes of the grid the vector lives on,
/// so that ‖·‖ approximates the L¹(Ω) resp. L²(Ω) norm of the grid function.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Norm {
    #[default]
    Euclidean,
    WeightedL1(Arc<[f64]>),
    WeightedL2(Arc<[f64]>),
}

impl Norm {
    pub fn eval(&self, v: &[f64]) -> Result<f64> {
        match self {
            Norm::Euclidean => Ok(v.iter().map(|x| x * x).sum::<f64>().sqrt()),
            Norm::WeightedL1(w) => {
                check_len(w, v)?;
                Ok(v.iter().zip(w.iter()).map(|(x, w)| w * x.abs()).sum())
            }
            Norm::WeightedL2(w) => {
                check_len(w, v)?;
                Ok(v.iter().zip(w.iter()).map(|(x, w)| w * x * x).sum::<f64>().sqrt())
            }
        }
    }

    /// Like [`Norm::eval`] but panics on a length mismatch; for internal use where
    /// dimensions were validated up front.
    pub(crate) fn of(&self, v: &[f64]) -> f64 {
        self.eval(v).expect("norm length validated by caller")
    }

    pub fn tag(&self) -> NormTag {
        match self {
            Norm::Euclidean => NormTag::Euclidean,
            Norm::WeightedL1(_) => NormTag::WeightedL1,
            Norm::WeightedL2(_) => NormTag::WeightedL2,
        }
    }
}

fn check_len(w: &[f64], v: &[f64]) -> Result<()> {
    if w.len() != v.len() {
        return Err(structural(format!(
            "norm weights have length {} but vector has length {}",
            w.len(),
            v.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormTag {
    Euclidean,
    WeightedL1,
    WeightedL2,
}

/// A finite-dimensional point or direction together with its norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    entries: Vec<f64>,
    norm: Norm,
}

impl Vector {
    pub fn new(entries: Vec<f64>, norm: Norm) -> Result<Self> {
        if let Some(i) = entries.iter().position(|x| !x.is_finite()) {
            return Err(structural(format!("entry {i} is not finite")));
        }
        match &norm {
            Norm::WeightedL1(w) | Norm::WeightedL2(w) => check_len(w, &entries)?,
            Norm::Euclidean => {}
        }
        Ok(Self { entries, norm })
    }

    pub fn euclidean(entries: Vec<f64>) -> Result<Self> {
        Self::new(entries, Norm::Euclidean)
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm_kind(&self) -> &Norm {
        &self.norm
    }

    pub fn norm(&self) -> f64 {
        self.norm.of(&self.entries)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|x| alpha * x).collect(),
            norm: self.norm.clone(),
        }
    }
}

impl std::ops::Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.entries
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Grid;
    use proptest::prelude::*;

    #[test]
    fn euclidean_pythagoras() {
        assert_eq!(Vector::euclidean(vec![3.0, 4.0]).unwrap().norm(), 5.0);
    }

    #[test]
    fn weighted_l1_constant_on_unit_interval() {
        let g = Grid::interval(0.0, 1.0, 4).unwrap();
        let v = Vector::new(vec![1.0; 4], g.l1_norm()).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-15);
        let z = Vector::new(vec![0.0; 4], g.l1_norm()).unwrap();
        assert_eq!(z.norm(), 0.0);
    }

    #[test]
    fn mismatched_weights_rejected() {
        let g = Grid::interval(0.0, 1.0, 4).unwrap();
        assert!(Vector::new(vec![1.0; 3], g.l2_norm()).is_err());
        assert!(g.l1_norm().eval(&[1.0; 5]).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        assert!(Vector::euclidean(vec![f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn norm_axioms(v in prop::collection::vec(-1e3f64..1e3, 4), a in 0.0f64..10.0) {
            let g = Grid::interval(0.0, 2.0, 4).unwrap();
            for norm in [Norm::Euclidean, g.l1_norm(), g.l2_norm()] {
                let x = Vector::new(v.clone(), norm.clone()).unwrap();
                prop_assert!(x.norm() >= 0.0);
                let lhs = x.scaled(a).norm();
                prop_assert!((lhs - a * x.norm()).abs() <= 1e-9 * (1.0 + lhs));
                if v.iter().all(|e| *e == 0.0) {
                    prop_assert_eq!(x.norm(), 0.0);
                } else {
                    prop_assert!(x.norm() > 0.0);
                }
            }
        }
    }
}
