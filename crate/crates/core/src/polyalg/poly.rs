//! Matrix-valued polynomials in `s` and `θ` with affine coefficients.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;

use super::affine::{AffineAccumulator, AffineScalar, VarId};
use crate::error::{Error, Result};

/// The two polynomial variables.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    S,
    Theta,
}

/// `s^s · θ^theta`. Ordered graded-lexicographically with `s` before `θ`:
/// `1, s, θ, s², sθ, θ², …`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    pub s: u32,
    pub theta: u32,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { s: 0, theta: 0 };

    pub fn new(s: u32, theta: u32) -> Self {
        Monomial { s, theta }
    }

    pub fn degree(&self) -> u32 {
        self.s + self.theta
    }

    pub fn exponent(&self, var: Var) -> u32 {
        match var {
            Var::S => self.s,
            Var::Theta => self.theta,
        }
    }

    fn with_exponent(self, var: Var, e: u32) -> Monomial {
        match var {
            Var::S => Monomial { s: e, ..self },
            Var::Theta => Monomial { theta: e, ..self },
        }
    }

    pub fn times(self, other: Monomial) -> Monomial {
        Monomial {
            s: self.s + other.s,
            theta: self.theta + other.theta,
        }
    }

    pub fn eval(&self, s: f64, theta: f64) -> f64 {
        s.powi(self.s as i32) * theta.powi(self.theta as i32)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.s.cmp(&self.s))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One scalar linear equation `Σ coef·x = rhs` over decision variables.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearEquation {
    pub terms: Vec<(VarId, f64)>,
    pub rhs: f64,
}

impl LinearEquation {
    /// The equation `a = 0`.
    pub fn from_affine_zero(a: &AffineScalar) -> Self {
        LinearEquation {
            terms: a.terms().to_vec(),
            rhs: -a.constant_part(),
        }
    }

    /// An equation without variables and nonzero right-hand side.
    pub fn is_contradiction(&self) -> bool {
        self.terms.is_empty() && self.rhs != 0.0
    }

    pub fn residual(&self, assignment: &[f64]) -> Result<f64> {
        let mut v = -self.rhs;
        for &(id, c) in &self.terms {
            v += c * assignment
                .get(id.index())
                .ok_or(Error::MissingAssignment(id.0))?;
        }
        Ok(v)
    }
}

/// A `rows × cols` matrix polynomial in `s, θ`; stored coefficient matrices
/// are row-major and never entirely zero.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPoly {
    rows: usize,
    cols: usize,
    terms: BTreeMap<Monomial, Vec<AffineScalar>>,
}

fn is_all_zero(c: &[AffineScalar]) -> bool {
    c.iter().all(AffineScalar::is_zero)
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * f64::from(n - i) / f64::from(i + 1);
    }
    r
}

impl MatrixPoly {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatrixPoly {
            rows,
            cols,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_matrix(&DMatrix::identity(n, n))
    }

    /// Constant polynomial from a numeric matrix.
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut c = Vec::with_capacity(m.nrows() * m.ncols());
        for r in 0..m.nrows() {
            for col in 0..m.ncols() {
                c.push(AffineScalar::constant(m[(r, col)]));
            }
        }
        Self::from_coefficient(m.nrows(), m.ncols(), Monomial::ONE, c)
    }

    /// Constant polynomial from row-major affine entries.
    pub fn from_affine(rows: usize, cols: usize, entries: Vec<AffineScalar>) -> Self {
        Self::from_coefficient(rows, cols, Monomial::ONE, entries)
    }

    /// A single monomial times a row-major coefficient matrix.
    pub fn from_coefficient(
        rows: usize,
        cols: usize,
        mono: Monomial,
        c: Vec<AffineScalar>,
    ) -> Self {
        assert_eq!(
            c.len(),
            rows * cols,
            "coefficient length must equal rows*cols"
        );
        let mut terms = BTreeMap::new();
        if !is_all_zero(&c) {
            terms.insert(mono, c);
        }
        MatrixPoly { rows, cols, terms }
    }

    /// Scalar `coef · mono`.
    pub fn scalar_monomial(mono: Monomial, coef: f64) -> Self {
        Self::from_coefficient(1, 1, mono, vec![AffineScalar::constant(coef)])
    }

    pub fn scalar_constant(c: f64) -> Self {
        Self::scalar_monomial(Monomial::ONE, c)
    }

    /// The scalar polynomial `s` or `θ`.
    pub fn variable(var: Var) -> Self {
        let mono = Monomial::ONE.with_exponent(var, 1);
        Self::scalar_monomial(mono, 1.0)
    }

    /// Builds from (monomial, row-major coefficients) pairs, summing repeats.
    pub fn from_terms(
        rows: usize,
        cols: usize,
        terms: impl IntoIterator<Item = (Monomial, Vec<AffineScalar>)>,
    ) -> Self {
        let mut out = MatrixPoly::zeros(rows, cols);
        for (m, c) in terms {
            out.accumulate(m, &c, 1.0);
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Iterates `(monomial, row-major coefficients)` in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Vec<AffineScalar>)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, mono: Monomial) -> Option<&[AffineScalar]> {
        self.terms.get(&mono).map(Vec::as_slice)
    }

    pub fn entry(&self, mono: Monomial, r: usize, c: usize) -> AffineScalar {
        self.terms
            .get(&mono)
            .map(|v| v[r * self.cols + c].clone())
            .unwrap_or_default()
    }

    /// Which of `s`, `θ` actually occur.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        if self.terms.keys().any(|m| m.s > 0) {
            out.push(Var::S);
        }
        if self.terms.keys().any(|m| m.theta > 0) {
            out.push(Var::Theta);
        }
        out
    }

    /// Maximum total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn degree_in(&self, var: Var) -> Option<u32> {
        self.terms.keys().map(|m| m.exponent(var)).max()
    }

    /// True when no coefficient references a decision variable.
    pub fn is_numeric(&self) -> bool {
        self.terms
            .values()
            .all(|c| c.iter().all(AffineScalar::is_constant))
    }

    /// All decision variables referenced.
    pub fn decision_vars(&self) -> Vec<VarId> {
        let mut ids: Vec<VarId> = self
            .terms
            .values()
            .flatten()
            .flat_map(|a| a.terms().iter().map(|t| t.0))
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }

    fn accumulate(&mut self, mono: Monomial, c: &[AffineScalar], scale: f64) {
        debug_assert_eq!(c.len(), self.rows * self.cols);
        if scale == 0.0 || is_all_zero(c) {
            return;
        }
        match self.terms.get_mut(&mono) {
            Some(existing) => {
                for (e, x) in existing.iter_mut().zip(c) {
                    if !x.is_zero() {
                        *e = e.add_scaled(x, scale);
                    }
                }
                if is_all_zero(existing) {
                    self.terms.remove(&mono);
                }
            }
            None => {
                self.terms
                    .insert(mono, c.iter().map(|x| x.scale(scale)).collect());
            }
        }
    }

    fn check_same_shape(&self, other: &MatrixPoly, what: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, other: &MatrixPoly, c: f64) -> Result<MatrixPoly> {
        self.check_same_shape(other, "add")?;
        let mut out = self.clone();
        for (m, coef) in &other.terms {
            out.accumulate(*m, coef, c);
        }
        Ok(out)
    }

    pub fn add(&self, other: &MatrixPoly) -> Result<MatrixPoly> {
        self.add_scaled(other, 1.0)
    }

    pub fn sub(&self, other: &MatrixPoly) -> Result<MatrixPoly> {
        self.add_scaled(other, -1.0)
    }

    pub fn scale(&self, c: f64) -> MatrixPoly {
        let mut out = MatrixPoly::zeros(self.rows, self.cols);
        for (m, coef) in &self.terms {
            out.accumulate(*m, coef, c);
        }
        out
    }

    pub fn neg(&self) -> MatrixPoly {
        self.scale(-1.0)
    }

    pub fn transpose(&self) -> MatrixPoly {
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut t = Vec::with_capacity(c.len());
                for col in 0..self.cols {
                    for r in 0..self.rows {
                        t.push(c[r * self.cols + col].clone());
                    }
                }
                (*m, t)
            })
            .collect();
        MatrixPoly {
            rows: self.cols,
            cols: self.rows,
            terms,
        }
    }

    /// Polynomial matrix product. Fails if both factors carry decision variables.
    pub fn mul(&self, other: &MatrixPoly) -> Result<MatrixPoly> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "multiply: {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if !self.is_numeric() && !other.is_numeric() {
            return Err(Error::NonlinearProduct);
        }
        let (n, k, p) = (self.rows, self.cols, other.cols);
        let mut acc: BTreeMap<Monomial, Vec<AffineAccumulator>> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let slot = acc
                    .entry(ma.times(*mb))
                    .or_insert_with(|| vec![AffineAccumulator::default(); n * p]);
                for i in 0..n {
                    for l in 0..k {
                        let a = &ca[i * k + l];
                        if a.is_zero() {
                            continue;
                        }
                        for j in 0..p {
                            let b = &cb[l * p + j];
                            if b.is_zero() {
                                continue;
                            }
                            if a.is_constant() {
                                slot[i * p + j].add_scaled(b, a.constant_part());
                            } else {
                                slot[i * p + j].add_scaled(a, b.constant_part());
                            }
                        }
                    }
                }
            }
        }
        Ok(Self::from_accumulators(n, p, acc))
    }

    fn from_accumulators(
        rows: usize,
        cols: usize,
        acc: BTreeMap<Monomial, Vec<AffineAccumulator>>,
    ) -> MatrixPoly {
        let mut terms = BTreeMap::new();
        for (m, v) in acc {
            let c: Vec<AffineScalar> = v.into_iter().map(AffineAccumulator::finish).collect();
            if !is_all_zero(&c) {
                terms.insert(m, c);
            }
        }
        MatrixPoly { rows, cols, terms }
    }

    /// Left multiplication by a numeric matrix.
    pub fn left_mul_matrix(&self, a: &DMatrix<f64>) -> Result<MatrixPoly> {
        MatrixPoly::from_matrix(a).mul(self)
    }

    /// Right multiplication by a numeric matrix.
    pub fn right_mul_matrix(&self, a: &DMatrix<f64>) -> Result<MatrixPoly> {
        self.mul(&MatrixPoly::from_matrix(a))
    }

    /// Multiplies every entry by a scalar (1×1) polynomial.
    pub fn mul_scalar_poly(&self, p: &MatrixPoly) -> Result<MatrixPoly> {
        if p.shape() != (1, 1) {
            return Err(Error::DimensionMismatch("scalar factor must be 1x1".into()));
        }
        if !self.is_numeric() && !p.is_numeric() {
            return Err(Error::NonlinearProduct);
        }
        let mut out = MatrixPoly::zeros(self.rows, self.cols);
        for (mp, cp) in &p.terms {
            let f = &cp[0];
            for (m, c) in &self.terms {
                let prod: Vec<AffineScalar> = c.iter().map(|x| x.mul(f)).collect::<Result<_>>()?;
                out.accumulate(m.times(*mp), &prod, 1.0);
            }
        }
        Ok(out)
    }

    /// Formal partial derivative.
    pub fn differentiate(&self, var: Var) -> MatrixPoly {
        let mut out = MatrixPoly::zeros(self.rows, self.cols);
        for (m, c) in &self.terms {
            let e = m.exponent(var);
            if e == 0 {
                continue;
            }
            out.accumulate(m.with_exponent(var, e - 1), c, f64::from(e));
        }
        out
    }

    /// Exact `∫_a^b p dvar`; the result no longer depends on `var`.
    pub fn integrate_definite(&self, var: Var, a: f64, b: f64) -> MatrixPoly {
        let mut out = MatrixPoly::zeros(self.rows, self.cols);
        for (m, c) in &self.terms {
            let e = m.exponent(var) as i32;
            let w = (b.powi(e + 1) - a.powi(e + 1)) / f64::from(e + 1);
            out.accumulate(m.with_exponent(var, 0), c, w);
        }
        out
    }

    /// Replaces `var` by `α·var + β`.
    pub fn affine_substitute(&self, var: Var, alpha: f64, beta: f64) -> Result<MatrixPoly> {
        if alpha == 0.0 {
            return Err(Error::ZeroScale);
        }
        let mut out = MatrixPoly::zeros(self.rows, self.cols);
        for (m, c) in &self.terms {
            let e = m.exponent(var);
            for k in 0..=e {
                let w = binomial(e, k) * alpha.powi(k as i32) * beta.powi((e - k) as i32);
                out.accumulate(m.with_exponent(var, k), c, w);
            }
        }
        Ok(out)
    }

    /// Fixes `var` at a numeric value (partial evaluation).
    pub fn evaluate_var(&self, var: Var, value: f64) -> MatrixPoly {
        let mut out = MatrixPoly::zeros(self.rows, self.cols);
        for (m, c) in &self.terms {
            let w = value.powi(m.exponent(var) as i32);
            out.accumulate(m.with_exponent(var, 0), c, w);
        }
        out
    }

    /// Exchanges the roles of `s` and `θ`.
    pub fn swap_vars(&self) -> MatrixPoly {
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                (
                    Monomial {
                        s: m.theta,
                        theta: m.s,
                    },
                    c.clone(),
                )
            })
            .collect();
        MatrixPoly {
            rows: self.rows,
            cols: self.cols,
            terms,
        }
    }

    /// Numeric value at `(s, θ)`.
    pub fn evaluate(&self, s: f64, theta: f64, assignment: &[f64]) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for (m, c) in &self.terms {
            let w = m.eval(s, theta);
            for r in 0..self.rows {
                for col in 0..self.cols {
                    out[(r, col)] += w * c[r * self.cols + col].eval(assignment)?;
                }
            }
        }
        Ok(out)
    }

    /// Replaces every decision variable by its numeric value.
    pub fn instantiate(&self, assignment: &[f64]) -> Result<MatrixPoly> {
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let v: Vec<AffineScalar> = c
                .iter()
                .map(|a| a.eval(assignment).map(AffineScalar::constant))
                .collect::<Result<_>>()?;
            if !is_all_zero(&v) {
                terms.insert(*m, v);
            }
        }
        Ok(MatrixPoly {
            rows: self.rows,
            cols: self.cols,
            terms,
        })
    }

    /// Sub-block `[r0..r0+nr, c0..c0+nc]`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> MatrixPoly {
        assert!(
            r0 + nr <= self.rows && c0 + nc <= self.cols,
            "block out of range"
        );
        let mut out = MatrixPoly::zeros(nr, nc);
        for (m, c) in &self.terms {
            let mut b = Vec::with_capacity(nr * nc);
            for r in 0..nr {
                for col in 0..nc {
                    b.push(c[(r0 + r) * self.cols + c0 + col].clone());
                }
            }
            out.accumulate(*m, &b, 1.0);
        }
        out
    }

    /// Assembles a block matrix; each block row must share heights and each
    /// block column widths.
    pub fn from_blocks(blocks: &[Vec<MatrixPoly>]) -> Result<MatrixPoly> {
        if blocks.is_empty() || blocks[0].is_empty() {
            return Err(Error::DimensionMismatch("empty block layout".into()));
        }
        let heights: Vec<usize> = blocks.iter().map(|row| row[0].rows).collect();
        let widths: Vec<usize> = blocks[0].iter().map(|b| b.cols).collect();
        for (bi, row) in blocks.iter().enumerate() {
            if row.len() != widths.len() {
                return Err(Error::DimensionMismatch("ragged block layout".into()));
            }
            for (bj, b) in row.iter().enumerate() {
                if b.rows != heights[bi] || b.cols != widths[bj] {
                    return Err(Error::DimensionMismatch(format!(
                        "block ({bi},{bj}) is {}x{}, expected {}x{}",
                        b.rows, b.cols, heights[bi], widths[bj]
                    )));
                }
            }
        }
        let rows: usize = heights.iter().sum();
        let cols: usize = widths.iter().sum();
        let mut terms: BTreeMap<Monomial, Vec<AffineScalar>> = BTreeMap::new();
        let mut r0 = 0;
        for (bi, row) in blocks.iter().enumerate() {
            let mut c0 = 0;
            for (bj, b) in row.iter().enumerate() {
                for (m, c) in &b.terms {
                    let slot = terms
                        .entry(*m)
                        .or_insert_with(|| vec![AffineScalar::ZERO; rows * cols]);
                    for r in 0..b.rows {
                        for col in 0..b.cols {
                            slot[(r0 + r) * cols + c0 + col] = c[r * b.cols + col].clone();
                        }
                    }
                }
                c0 += widths[bj];
            }
            r0 += heights[bi];
        }
        Ok(MatrixPoly { rows, cols, terms })
    }

    /// Largest absolute numeric coefficient (constant parts only).
    pub fn max_abs_constant(&self) -> f64 {
        self.terms
            .values()
            .flatten()
            .map(|a| a.constant_part().abs())
            .fold(0.0, f64::max)
    }
}

/// One equation per (entry, monomial) present in either side; satisfied
/// constant equations are dropped, contradictory ones are kept.
pub fn coefficient_equalities(a: &MatrixPoly, b: &MatrixPoly) -> Result<Vec<LinearEquation>> {
    let diff = a.sub(b)?;
    let mut out = Vec::new();
    for c in diff.terms.values() {
        for e in c {
            if e.is_zero() {
                continue;
            }
            out.push(LinearEquation::from_affine_zero(e));
        }
    }
    Ok(out)
}

impl fmt::Display for MatrixPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0[{}x{}]", self.rows, self.cols);
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "[")?;
            for (i, x) in c.iter().enumerate() {
                if i > 0 {
                    write!(f, "; ")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "]·s^{}θ^{}", m.s, m.theta)?;
        }
        Ok(())
    }
}

/// Collects contributions per `(monomial, entry)` and builds a
/// [`MatrixPoly`] in one pass. Used by the large Gram expansions.
#[derive(Clone, Debug)]
pub struct MatrixPolyBuilder {
    rows: usize,
    cols: usize,
    acc: BTreeMap<Monomial, Vec<AffineAccumulator>>,
}

impl MatrixPolyBuilder {
    pub fn new(rows: usize, cols: usize) -> Self {
        MatrixPolyBuilder {
            rows,
            cols,
            acc: BTreeMap::new(),
        }
    }

    fn slot(&mut self, mono: Monomial, r: usize, c: usize) -> &mut AffineAccumulator {
        let n = self.rows * self.cols;
        let cols = self.cols;
        &mut self
            .acc
            .entry(mono)
            .or_insert_with(|| vec![AffineAccumulator::default(); n])[r * cols + c]
    }

    pub fn add_var(&mut self, mono: Monomial, r: usize, c: usize, id: VarId, coef: f64) {
        if coef != 0.0 {
            self.slot(mono, r, c).add_var(id, coef);
        }
    }

    pub fn add_constant(&mut self, mono: Monomial, r: usize, c: usize, coef: f64) {
        if coef != 0.0 {
            self.slot(mono, r, c).add_constant(coef);
        }
    }

    pub fn add_affine(&mut self, mono: Monomial, r: usize, c: usize, a: &AffineScalar, coef: f64) {
        if coef != 0.0 && !a.is_zero() {
            self.slot(mono, r, c).add_scaled(a, coef);
        }
    }

    pub fn finish(self) -> MatrixPoly {
        MatrixPoly::from_accumulators(self.rows, self.cols, self.acc)
    }
}
