//! Scalars that are affine in the SDP decision variables.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Identifier of a scalar decision variable in an [`crate::sdp::SdpProblem`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// `constant + Σ coef·x_id`. Terms are kept sorted by id with no exact zeros.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct AffineScalar {
    constant: f64,
    terms: Vec<(VarId, f64)>,
}

impl AffineScalar {
    pub const ZERO: AffineScalar = AffineScalar {
        constant: 0.0,
        terms: Vec::new(),
    };

    pub fn constant(c: f64) -> Self {
        AffineScalar {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn var(id: VarId) -> Self {
        AffineScalar {
            constant: 0.0,
            terms: vec![(id, 1.0)],
        }
    }

    pub fn scaled_var(id: VarId, coef: f64) -> Self {
        let terms = if coef == 0.0 {
            Vec::new()
        } else {
            vec![(id, coef)]
        };
        AffineScalar {
            constant: 0.0,
            terms,
        }
    }

    /// Builds from an arbitrary term list, merging duplicates.
    pub fn from_terms(constant: f64, terms: impl IntoIterator<Item = (VarId, f64)>) -> Self {
        let mut terms: Vec<(VarId, f64)> = terms.into_iter().collect();
        normalize_terms(&mut terms);
        AffineScalar { constant, terms }
    }

    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> &[(VarId, f64)] {
        &self.terms
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.is_empty()
    }

    pub fn coefficient_of(&self, id: VarId) -> f64 {
        match self.terms.binary_search_by_key(&id, |t| t.0) {
            Ok(k) => self.terms[k].1,
            Err(_) => 0.0,
        }
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, other: &AffineScalar, c: f64) -> AffineScalar {
        if c == 0.0 {
            return self.clone();
        }
        let mut terms = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let take_left = j >= other.terms.len()
                || (i < self.terms.len() && self.terms[i].0 < other.terms[j].0);
            let take_right = i >= self.terms.len()
                || (j < other.terms.len() && other.terms[j].0 < self.terms[i].0);
            if take_left {
                terms.push(self.terms[i]);
                i += 1;
            } else if take_right {
                let (id, v) = other.terms[j];
                let v = c * v;
                if v != 0.0 {
                    terms.push((id, v));
                }
                j += 1;
            } else {
                let v = self.terms[i].1 + c * other.terms[j].1;
                if v != 0.0 {
                    terms.push((self.terms[i].0, v));
                }
                i += 1;
                j += 1;
            }
        }
        AffineScalar {
            constant: self.constant + c * other.constant,
            terms,
        }
    }

    pub fn add(&self, other: &AffineScalar) -> AffineScalar {
        self.add_scaled(other, 1.0)
    }

    pub fn sub(&self, other: &AffineScalar) -> AffineScalar {
        self.add_scaled(other, -1.0)
    }

    pub fn scale(&self, c: f64) -> AffineScalar {
        if c == 0.0 {
            return AffineScalar::ZERO;
        }
        AffineScalar {
            constant: self.constant * c,
            terms: self
                .terms
                .iter()
                .map(|&(id, v)| (id, v * c))
                .filter(|t| t.1 != 0.0)
                .collect(),
        }
    }

    pub fn neg(&self) -> AffineScalar {
        self.scale(-1.0)
    }

    /// Product; rejected when both factors depend on decision variables.
    pub fn mul(&self, other: &AffineScalar) -> Result<AffineScalar> {
        match (self.is_constant(), other.is_constant()) {
            (false, false) => Err(Error::NonlinearProduct),
            (true, _) => Ok(other.scale(self.constant)),
            (false, true) => Ok(self.scale(other.constant)),
        }
    }

    /// Value under a numeric assignment indexed by `VarId`.
    pub fn eval(&self, assignment: &[f64]) -> Result<f64> {
        let mut v = self.constant;
        for &(id, c) in &self.terms {
            let x = assignment
                .get(id.index())
                .ok_or(Error::MissingAssignment(id.0))?;
            v += c * x;
        }
        Ok(v)
    }
}

impl fmt::Display for AffineScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constant)?;
        for (id, c) in &self.terms {
            write!(f, " + {c}·{id}")?;
        }
        Ok(())
    }
}

fn normalize_terms(terms: &mut Vec<(VarId, f64)>) {
    terms.sort_by_key(|t| t.0);
    let mut out: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
    for &(id, v) in terms.iter() {
        match out.last_mut() {
            Some(last) if last.0 == id => last.1 += v,
            _ => out.push((id, v)),
        }
    }
    out.retain(|t| t.1 != 0.0);
    *terms = out;
}

/// Accumulates many small contributions into one [`AffineScalar`] without
/// the quadratic cost of repeated sorted merges.
#[derive(Clone, Debug, Default)]
pub struct AffineAccumulator {
    constant: f64,
    terms: HashMap<VarId, f64>,
}

impl AffineAccumulator {
    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    pub fn add_var(&mut self, id: VarId, c: f64) {
        *self.terms.entry(id).or_insert(0.0) += c;
    }

    pub fn add_scaled(&mut self, a: &AffineScalar, c: f64) {
        self.constant += c * a.constant;
        for &(id, v) in &a.terms {
            self.add_var(id, c * v);
        }
    }

    pub fn finish(self) -> AffineScalar {
        AffineScalar::from_terms(self.constant, self.terms)
    }
}
