//! Quadratic forms: congruence diagonalization away from characteristic 2,
//! symplectic (Arf) normal form in characteristic 2.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde_json::{json, Value};
use thiserror::Error;

use crate::field::{Field, FieldError, Scalar};
use crate::jet::{default_var_names, CoordinateChange, Jet};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuadError {
    #[error("precision {0} is too low to read off a quadratic part")]
    LowPrecision(u32),
    #[error("input has terms of degree below 2")]
    NotInMaximalIdealSquared,
    #[error("operation requires characteristic {}", if *.0 { "2" } else { "other than 2" })]
    WrongCharacteristic(bool),
    #[error("operation requires a finite field of characteristic 2")]
    NotFiniteChar2,
    #[error("normal form has the wrong variant for this operation")]
    WrongVariant,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// `q(x) = sum_{i<=j} a_ij x_i x_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticForm {
    field: Field,
    nvars: usize,
    coeffs: BTreeMap<(usize, usize), Scalar>,
}

impl QuadraticForm {
    pub fn zero(field: Field, nvars: usize) -> Self {
        QuadraticForm { field, nvars, coeffs: BTreeMap::new() }
    }

    pub fn from_coeffs(field: Field, nvars: usize, entries: impl IntoIterator<Item = ((usize, usize), Scalar)>) -> Self {
        let mut q = QuadraticForm::zero(field, nvars);
        for ((i, j), c) in entries {
            let key = if i <= j { (i, j) } else { (j, i) };
            let v = &q.coeff(key.0, key.1) + &c;
            q.set(key.0, key.1, v);
        }
        q
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `a_ij`, with the indices taken in either order.
    pub fn coeff(&self, i: usize, j: usize) -> Scalar {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.coeffs.get(&key).cloned().unwrap_or_else(|| self.field.zero())
    }

    fn set(&mut self, i: usize, j: usize, v: Scalar) {
        if v.is_zero() {
            self.coeffs.remove(&(i, j));
        } else {
            self.coeffs.insert((i, j), v);
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &Scalar)> {
        self.coeffs.iter()
    }

    pub fn to_jet(&self, precision: u32) -> Jet {
        let n = self.nvars;
        let terms = self.coeffs.iter().map(|(&(i, j), c)| {
            let mut e = vec![0; n];
            e[i] += 1;
            e[j] += 1;
            (e, c.clone())
        });
        Jet::from_terms(self.field, n, precision, terms).expect("well-formed quadratic form")
    }

    /// Polar matrix `b(e_i, e_j) = q(e_i + e_j) - q(e_i) - q(e_j)`, which is
    /// also the Hessian: `2 a_ii` on the diagonal, `a_ij` off it.
    pub fn bilinear_matrix(&self) -> Matrix {
        let mut b = Matrix::zeros(self.field, self.nvars, self.nvars);
        let two = self.field.from_i64(2);
        for (&(i, j), c) in &self.coeffs {
            if i == j {
                b.set(i, i, c * &two);
            } else {
                b.set(i, j, c.clone());
                b.set(j, i, c.clone());
            }
        }
        b
    }

    /// Symmetric matrix `S` with `q(x) = x^T S x`; requires characteristic
    /// other than 2.
    pub fn symmetric_matrix(&self) -> Result<Matrix, QuadError> {
        if self.field.is_char2() {
            return Err(QuadError::WrongCharacteristic(false));
        }
        let half = self.field.from_i64(2).inv()?;
        let mut s = Matrix::zeros(self.field, self.nvars, self.nvars);
        for (&(i, j), c) in &self.coeffs {
            if i == j {
                s.set(i, i, c.clone());
            } else {
                let h = c * &half;
                s.set(i, j, h.clone());
                s.set(j, i, h);
            }
        }
        Ok(s)
    }

    pub fn eval(&self, x: &[Scalar]) -> Scalar {
        self.coeffs.iter().fold(self.field.zero(), |acc, (&(i, j), c)| &acc + &(&(c * &x[i]) * &x[j]))
    }

    /// Polar form `b(u, v)`.
    pub fn polar(&self, u: &[Scalar], v: &[Scalar]) -> Scalar {
        let bu = self.bilinear_matrix().mul_vec(v);
        u.iter().zip(&bu).fold(self.field.zero(), |acc, (a, b)| &acc + &(a * b))
    }

    /// The form `x -> q(C x)`.
    pub fn transform(&self, c: &Matrix) -> QuadraticForm {
        assert_eq!(c.rows(), self.nvars);
        let m = c.cols();
        let mut out = QuadraticForm::zero(self.field, m);
        for k in 0..m {
            for l in k..m {
                let mut acc = self.field.zero();
                for (&(i, j), a) in &self.coeffs {
                    let t = if k == l {
                        c.get(i, k) * c.get(j, k)
                    } else {
                        &(c.get(i, k) * c.get(j, l)) + &(c.get(i, l) * c.get(j, k))
                    };
                    if !t.is_zero() {
                        acc = &acc + &(a * &t);
                    }
                }
                out.set(k, l, acc);
            }
        }
        out
    }

    /// Rank of the polar matrix (the Hessian rank).
    pub fn hessian_rank(&self) -> usize {
        self.bilinear_matrix().rank()
    }
}

/// The degree-2 part of `f`, which must lie in `m^2`.
pub fn quad_extract(f: &Jet) -> Result<QuadraticForm, QuadError> {
    if f.precision() < 2 {
        return Err(QuadError::LowPrecision(f.precision()));
    }
    if f.order().is_some_and(|o| o < 2) {
        return Err(QuadError::NotInMaximalIdealSquared);
    }
    let n = f.nvars();
    let mut q = QuadraticForm::zero(f.field(), n);
    for (m, c) in f.terms().take_while(|(m, _)| m.degree() == 2) {
        let e = m.exps();
        let mut idx = Vec::new();
        for (i, &x) in e.iter().enumerate() {
            for _ in 0..x {
                idx.push(i);
            }
        }
        q.set(idx[0], idx[1], c.clone());
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NormalKind {
    /// `sum a_i x_i^2` over the first `coeffs.len()` variables.
    Diagonal { coeffs: Vec<Scalar> },
    /// `x_1^2 + ... + x_k^2`.
    UnitDiagonal { rank: usize },
    /// `sum (a_i x_i^2 + x_i x_{i+1} + a_{i+1} x_{i+1}^2) + sum d_j x_j^2`,
    /// one `d_j` per variable after the pairs (zero allowed).
    Arf { pairs: Vec<(Scalar, Scalar)>, tail: Vec<Scalar> },
    /// `x_1 x_2 + ... + x_{2l-1} x_{2l}`, plus `x_{2l+1}^2` if `square_term`.
    Char2Solvable { half_rank: usize, square_term: bool },
}

/// A normal form together with the linear transition `C`:
/// `original(C x) == normal form`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadNormalForm {
    field: Field,
    nvars: usize,
    kind: NormalKind,
    transition: Matrix,
}

impl QuadNormalForm {
    pub fn kind(&self) -> &NormalKind {
        &self.kind
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn transition_change(&self, precision: u32) -> CoordinateChange {
        CoordinateChange::from_matrix(&self.transition, precision)
    }

    /// Number of head variables: `k`, or `2l` in characteristic 2.
    pub fn rank(&self) -> usize {
        match &self.kind {
            NormalKind::Diagonal { coeffs } => coeffs.len(),
            NormalKind::UnitDiagonal { rank } => *rank,
            NormalKind::Arf { pairs, .. } => 2 * pairs.len(),
            NormalKind::Char2Solvable { half_rank, .. } => 2 * half_rank,
        }
    }

    /// Head part only (the diagonal or the paired blocks).
    pub fn head_form(&self) -> QuadraticForm {
        let f = self.field;
        let n = self.nvars;
        match &self.kind {
            NormalKind::Diagonal { coeffs } => {
                QuadraticForm::from_coeffs(f, n, coeffs.iter().enumerate().map(|(i, a)| ((i, i), a.clone())))
            }
            NormalKind::UnitDiagonal { rank } => QuadraticForm::from_coeffs(f, n, (0..*rank).map(|i| ((i, i), f.one()))),
            NormalKind::Arf { pairs, .. } => {
                let mut e = Vec::new();
                for (p, (a, b)) in pairs.iter().enumerate() {
                    let i = 2 * p;
                    e.push(((i, i), a.clone()));
                    e.push(((i, i + 1), f.one()));
                    e.push(((i + 1, i + 1), b.clone()));
                }
                QuadraticForm::from_coeffs(f, n, e)
            }
            NormalKind::Char2Solvable { half_rank, .. } => {
                QuadraticForm::from_coeffs(f, n, (0..*half_rank).map(|p| ((2 * p, 2 * p + 1), f.one())))
            }
        }
    }

    /// The diagonal square tail on the non-head variables.
    pub fn tail_form(&self) -> QuadraticForm {
        let f = self.field;
        let n = self.nvars;
        match &self.kind {
            NormalKind::Arf { pairs, tail } => {
                let h = 2 * pairs.len();
                QuadraticForm::from_coeffs(f, n, tail.iter().enumerate().map(|(j, d)| ((h + j, h + j), d.clone())))
            }
            NormalKind::Char2Solvable { half_rank, square_term: true } => {
                let h = 2 * half_rank;
                QuadraticForm::from_coeffs(f, n, [((h, h), f.one())])
            }
            _ => QuadraticForm::zero(f, n),
        }
    }

    /// The full normal form `head + tail`.
    pub fn form(&self) -> QuadraticForm {
        let mut q = self.head_form();
        for (&(i, j), c) in self.tail_form().entries() {
            q.set(i, j, c.clone());
        }
        q
    }

    /// Checks `original(C x) == form()` by expansion, and that `C` is
    /// invertible.
    pub fn verify(&self, original: &QuadraticForm) -> bool {
        self.transition.is_invertible() && original.transform(&self.transition) == self.form()
    }

    pub fn variant_name(&self) -> &'static str {
        match self.kind {
            NormalKind::Diagonal { .. } => "diagonal",
            NormalKind::UnitDiagonal { .. } => "unit-diagonal",
            NormalKind::Arf { .. } => "arf",
            NormalKind::Char2Solvable { square_term: true, .. } => "char2-solvable-a",
            NormalKind::Char2Solvable { square_term: false, .. } => "char2-solvable-b",
        }
    }

    /// `{variant, rank, coefficients, transition}`.
    pub fn descriptor(&self) -> Value {
        let lit = |s: &Scalar| Value::String(s.to_literal());
        let coefficients = match &self.kind {
            NormalKind::Diagonal { coeffs } => json!({ "diagonal": coeffs.iter().map(lit).collect::<Vec<_>>() }),
            NormalKind::UnitDiagonal { rank } => json!({ "ones": rank }),
            NormalKind::Arf { pairs, tail } => json!({
                "pairs": pairs.iter().map(|(a, b)| vec![lit(a), lit(b)]).collect::<Vec<_>>(),
                "tail": tail.iter().map(lit).collect::<Vec<_>>(),
                "half_rank": pairs.len(),
            }),
            NormalKind::Char2Solvable { half_rank, square_term } => {
                json!({ "half_rank": half_rank, "square_term": square_term })
            }
        };
        let transition: Vec<Vec<Value>> =
            self.transition.to_rows().iter().map(|r| r.iter().map(lit).collect()).collect();
        json!({
            "variant": self.variant_name(),
            "rank": self.rank(),
            "coefficients": coefficients,
            "transition": transition,
            "form": self.form().to_jet(2).to_text(&default_var_names(self.nvars)),
        })
    }
}

fn col_axpy(m: &mut Matrix, dst: usize, factor: &Scalar, src: usize) {
    if factor.is_zero() {
        return;
    }
    for r in 0..m.rows() {
        let v = m.get(r, dst) + &(factor * m.get(r, src));
        m.set(r, dst, v);
    }
}

fn col_scale(m: &mut Matrix, c: usize, factor: &Scalar) {
    for r in 0..m.rows() {
        let v = m.get(r, c) * factor;
        m.set(r, c, v);
    }
}

fn col_swap(m: &mut Matrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    for r in 0..m.rows() {
        let x = m.get(r, a).clone();
        m.set(r, a, m.get(r, b).clone());
        m.set(r, b, x);
    }
}

/// Congruence step `S <- P^T S P` for the column operation
/// `col_dst += factor * col_src`.
fn congruence_axpy(s: &mut Matrix, dst: usize, factor: &Scalar, src: usize) {
    col_axpy(s, dst, factor, src);
    for c in 0..s.cols() {
        let v = s.get(dst, c) + &(factor * s.get(src, c));
        s.set(dst, c, v);
    }
}

fn congruence_swap(s: &mut Matrix, a: usize, b: usize) {
    col_swap(s, a, b);
    s.swap_rows(a, b);
}

/// Diagonalizes by symmetric Gaussian elimination. Over the rationals each
/// diagonal entry is reduced to its squarefree integer representative.
pub fn diagonalize_ne2(q: &QuadraticForm) -> Result<QuadNormalForm, QuadError> {
    let field = q.field;
    let n = q.nvars;
    let mut s = q.symmetric_matrix()?;
    let mut c = Matrix::identity(field, n);
    let mut r = 0;
    while r < n {
        let pivot = match (r..n).find(|&i| !s.get(i, i).is_zero()) {
            Some(p) => p,
            None => {
                let pair = (r..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).find(|&(i, j)| !s.get(i, j).is_zero());
                let Some((i, j)) = pair else { break };
                // x_j -> x_j + x_i gives S_ii = 2 S_ij
                let one = field.one();
                congruence_axpy(&mut s, i, &one, j);
                col_axpy(&mut c, i, &one, j);
                i
            }
        };
        congruence_swap(&mut s, r, pivot);
        col_swap(&mut c, r, pivot);
        let inv = s.get(r, r).inv()?;
        for j in r + 1..n {
            let f = -&(s.get(r, j) * &inv);
            if !f.is_zero() {
                congruence_axpy(&mut s, j, &f, r);
                col_axpy(&mut c, j, &f, r);
            }
        }
        r += 1;
    }
    let mut coeffs: Vec<Scalar> = (0..r).map(|i| s.get(i, i).clone()).collect();
    if field == Field::Rational {
        for (i, a) in coeffs.iter_mut().enumerate() {
            let (sf, t) = squarefree_rational(a.as_rational().unwrap());
            // a = sf * t^2, so x_i -> x_i / t turns a x_i^2 into sf x_i^2
            col_scale(&mut c, i, &Scalar::Rational(t.recip()));
            *a = Scalar::Rational(sf);
        }
    }
    Ok(QuadNormalForm { field, nvars: n, kind: NormalKind::Diagonal { coeffs }, transition: c })
}

/// Writes `a = s * t^2` with `s` a squarefree integer, removing square
/// factors found by trial division below `10^5`.
fn squarefree_rational(a: &BigRational) -> (BigRational, BigRational) {
    let num = a.numer() * a.denom();
    let den = a.denom().clone();
    let (s, m) = squarefree_int(&num);
    (BigRational::from_integer(s), BigRational::new(m, den))
}

fn squarefree_int(n: &BigInt) -> (BigInt, BigInt) {
    let mut rest = n.abs();
    let mut s = BigInt::one();
    let mut m = BigInt::one();
    let mut p: u64 = 2;
    while p < 100_000 && BigInt::from(p * p) <= rest {
        let bp = BigInt::from(p);
        let mut e = 0;
        while rest.is_multiple_of(&bp) {
            rest /= &bp;
            e += 1;
        }
        for _ in 0..e / 2 {
            m *= &bp;
        }
        if e % 2 == 1 {
            s *= &bp;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    // any cofactor left is either prime or too large to factor here
    s *= rest;
    if n.is_negative() {
        s = -s;
    }
    (s, m)
}

/// Result of trying to rescale a diagonal form to all-ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SquareNormalization {
    Unit(QuadNormalForm),
    /// Some `a_i` has no square root; over the rationals the sign pattern is
    /// reported.
    Absent { signs: Option<Vec<Sign>> },
}

pub fn normalize_squares(nf: &QuadNormalForm) -> Result<SquareNormalization, QuadError> {
    if nf.field.is_char2() {
        return Err(QuadError::WrongCharacteristic(false));
    }
    let NormalKind::Diagonal { coeffs } = &nf.kind else {
        return Err(QuadError::WrongVariant);
    };
    let mut c = nf.transition.clone();
    for (i, a) in coeffs.iter().enumerate() {
        match nf.field.sqrt(a)? {
            Some(r) => col_scale(&mut c, i, &r.inv()?),
            None => {
                let signs = (nf.field == Field::Rational)
                    .then(|| coeffs.iter().map(|a| if a.is_negative() { Sign::Negative } else { Sign::Positive }).collect());
                return Ok(SquareNormalization::Absent { signs });
            }
        }
    }
    Ok(SquareNormalization::Unit(QuadNormalForm {
        field: nf.field,
        nvars: nf.nvars,
        kind: NormalKind::UnitDiagonal { rank: coeffs.len() },
        transition: c,
    }))
}

/// Symplectic splitting of the polar form in characteristic 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArfDecomposition {
    pub gram: Matrix,
    /// `(v, w)` with `b(v, w) = 1`, mutually orthogonal across pairs.
    pub pairs: Vec<(Vec<Scalar>, Vec<Scalar>)>,
    pub radical: Vec<Vec<Scalar>>,
}

fn bform(b: &Matrix, u: &[Scalar], v: &[Scalar]) -> Scalar {
    let bv = b.mul_vec(v);
    u.iter().zip(&bv).fold(b.field().zero(), |acc, (x, y)| &acc + &(x * y))
}

fn vec_axpy(dst: &mut [Scalar], factor: &Scalar, src: &[Scalar]) {
    if factor.is_zero() {
        return;
    }
    for (d, s) in dst.iter_mut().zip(src) {
        *d = &*d + &(factor * s);
    }
}

pub fn arf_decompose(q: &QuadraticForm) -> Result<ArfDecomposition, QuadError> {
    let field = q.field;
    if !field.is_char2() {
        return Err(QuadError::WrongCharacteristic(true));
    }
    let n = q.nvars;
    let gram = q.bilinear_matrix();
    let mut work: Vec<Vec<Scalar>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { field.one() } else { field.zero() }).collect())
        .collect();
    let mut pairs = Vec::new();
    let mut radical = Vec::new();
    while !work.is_empty() {
        let v = work.remove(0);
        let partner = work.iter().position(|w| !bform(&gram, &v, w).is_zero());
        let Some(pos) = partner else {
            radical.push(v);
            continue;
        };
        let mut w = work.remove(pos);
        let scale = bform(&gram, &v, &w).inv()?;
        for x in w.iter_mut() {
            *x = &*x * &scale;
        }
        for u in work.iter_mut() {
            let buw = bform(&gram, u, &w);
            let buv = bform(&gram, u, &v);
            vec_axpy(u, &buw, &v);
            vec_axpy(u, &buv, &w);
        }
        pairs.push((v, w));
    }
    // radical vectors found early may precede later pairs; all of them are
    // orthogonal to every pair by construction
    Ok(ArfDecomposition { gram, pairs, radical })
}

fn matrix_from_columns(field: Field, cols: &[Vec<Scalar>]) -> Matrix {
    let n = cols.len();
    let mut m = Matrix::zeros(field, n, n);
    for (j, col) in cols.iter().enumerate() {
        for (i, x) in col.iter().enumerate() {
            m.set(i, j, x.clone());
        }
    }
    m
}

fn read_arf(q: &QuadraticForm, half_rank: usize) -> NormalKind {
    let pairs = (0..half_rank).map(|p| (q.coeff(2 * p, 2 * p), q.coeff(2 * p + 1, 2 * p + 1))).collect();
    let tail = (2 * half_rank..q.nvars).map(|j| q.coeff(j, j)).collect();
    NormalKind::Arf { pairs, tail }
}

pub fn arf_normal_form(q: &QuadraticForm) -> Result<QuadNormalForm, QuadError> {
    let d = arf_decompose(q)?;
    let mut cols = Vec::with_capacity(q.nvars);
    for (v, w) in &d.pairs {
        cols.push(v.clone());
        cols.push(w.clone());
    }
    cols.extend(d.radical.iter().cloned());
    let c = matrix_from_columns(q.field, &cols);
    let kind = read_arf(&q.transform(&c), d.pairs.len());
    Ok(QuadNormalForm { field: q.field, nvars: q.nvars, kind, transition: c })
}

/// Linear change builder tracking `current = original(C x)`.
struct Reducer {
    c: Matrix,
    current: QuadraticForm,
}

impl Reducer {
    fn new(nf: &QuadNormalForm) -> Self {
        Reducer { c: nf.transition.clone(), current: nf.form() }
    }

    fn field(&self) -> Field {
        self.current.field
    }

    /// Applies the substitution `x -> M x`.
    fn apply(&mut self, m: &Matrix) {
        self.current = self.current.transform(m);
        self.c = self.c.mul(m);
    }

    /// `x_dst -> x_dst + factor * x_src`.
    fn shear(&mut self, dst: usize, factor: &Scalar, src: usize) {
        let n = self.current.nvars;
        let mut m = Matrix::identity(self.field(), n);
        m.set(dst, src, &m.get(dst, src).clone() + factor);
        self.apply(&m);
    }

    fn scale(&mut self, i: usize, factor: &Scalar) {
        let n = self.current.nvars;
        let mut m = Matrix::identity(self.field(), n);
        m.set(i, i, factor.clone());
        self.apply(&m);
    }

    fn swap(&mut self, a: usize, b: usize) {
        let n = self.current.nvars;
        let mut m = Matrix::identity(self.field(), n);
        col_swap(&mut m, a, b);
        self.apply(&m);
    }

    /// Collapses the nonzero diagonal tail into a single `x_h^2`; returns
    /// whether any square term remains.
    fn collapse_tail(&mut self, h: usize) -> Result<Option<bool>, QuadError> {
        let field = self.field();
        let n = self.current.nvars;
        let mut nonzero = Vec::new();
        for j in h..n {
            let d = self.current.coeff(j, j);
            if d.is_zero() {
                continue;
            }
            let Some(r) = field.sqrt(&d)? else { return Ok(None) };
            self.scale(j, &r.inv()?);
            nonzero.push(j);
        }
        let Some((&first, rest)) = nonzero.split_first() else { return Ok(Some(false)) };
        for &j in rest {
            // (x_first + x_j)^2 + x_j^2 = x_first^2 in characteristic 2
            self.shear(first, &field.one(), j);
        }
        self.swap(h, first);
        Ok(Some(true))
    }

    /// Turns the pair at `(i, i+1)` into `x_i x_{i+1}` if
    /// `a u^2 + u + b = 0` is solvable.
    fn hyperbolize_pair(&mut self, i: usize) -> Result<bool, QuadError> {
        let field = self.field();
        let a = self.current.coeff(i, i);
        let b = self.current.coeff(i + 1, i + 1);
        let Some(u) = field.solve_affine_quadratic_char2(&a, &b)? else { return Ok(false) };
        self.shear(i, &u, i + 1);
        self.shear(i + 1, &a, i);
        Ok(true)
    }
}

/// Char-2 reduction to `x1x2 + ... (+ x_{2l+1}^2)`; `None` when some pair
/// needs a root of `a u^2 + u + b` that the field lacks.
pub fn arf_reduce_solvable(nf: &QuadNormalForm) -> Result<Option<QuadNormalForm>, QuadError> {
    let NormalKind::Arf { pairs, .. } = &nf.kind else {
        return Err(QuadError::WrongVariant);
    };
    let l = pairs.len();
    let mut red = Reducer::new(nf);
    for p in 0..l {
        if !red.hyperbolize_pair(2 * p)? {
            return Ok(None);
        }
    }
    let Some(square_term) = red.collapse_tail(2 * l)? else { return Ok(None) };
    let kind = NormalKind::Char2Solvable { half_rank: l, square_term };
    let out = QuadNormalForm { field: nf.field, nvars: nf.nvars, kind, transition: red.c };
    debug_assert_eq!(red.current, out.form());
    Ok(Some(out))
}

/// Smallest element (by bit pattern) of absolute trace 1.
fn trace_one_element(field: Field) -> Result<Scalar, QuadError> {
    let elems = field.elements().ok_or(QuadError::NotFiniteChar2)?;
    for e in elems {
        if field.trace_char2(&e)? == 1 {
            return Ok(e);
        }
    }
    Err(QuadError::NotFiniteChar2)
}

/// Canonical representative over a finite field of characteristic 2.
///
/// The result is the `Char2Solvable` shape when the form is hyperbolic or
/// has a square tail; otherwise an `Arf` form whose only non-hyperbolic
/// block is `x1^2 + x1 x2 + delta x2^2`, `delta` the first element of
/// trace 1. Two forms are linearly equivalent exactly when their canonical
/// kinds coincide, and the transitions exhibit the equivalence.
pub fn canonical_form_char2(q: &QuadraticForm) -> Result<QuadNormalForm, QuadError> {
    let field = q.field;
    if !field.is_char2() || field.order().is_none() {
        return Err(QuadError::NotFiniteChar2);
    }
    let nf = arf_normal_form(q)?;
    let l = nf.rank() / 2;
    let n = q.nvars;
    let mut red = Reducer::new(&nf);

    let square_term = red.collapse_tail(2 * l)?.expect("square roots exist in finite char-2 fields");
    if square_term {
        let h = 2 * l;
        for p in 0..l {
            let i = 2 * p;
            for j in [i, i + 1] {
                let a = red.current.coeff(j, j);
                if !a.is_zero() {
                    let r = field.sqrt(&a)?.unwrap();
                    // (x_h + r x_j)^2 = x_h^2 + a x_j^2 cancels the square
                    red.shear(h, &r, j);
                }
            }
        }
        let kind = NormalKind::Char2Solvable { half_rank: l, square_term: true };
        debug_assert_eq!(red.current, QuadNormalForm { field, nvars: n, kind: kind.clone(), transition: red.c.clone() }.form());
        return Ok(QuadNormalForm { field, nvars: n, kind, transition: red.c });
    }

    let delta = trace_one_element(field)?;
    let mut anisotropic = Vec::new();
    for p in 0..l {
        let i = 2 * p;
        if red.hyperbolize_pair(i)? {
            continue;
        }
        to_delta_pair(&mut red, i, &delta)?;
        anisotropic.push(i);
    }
    while anisotropic.len() >= 2 {
        let j = anisotropic.pop().unwrap();
        let i = anisotropic.pop().unwrap();
        merge_anisotropic(&mut red, i, j)?;
        for k in [i, j] {
            let ok = red.hyperbolize_pair(k)?;
            assert!(ok, "merged pair must be hyperbolic");
        }
    }
    if let Some(&i) = anisotropic.first() {
        if i != 0 {
            red.swap(0, i);
            red.swap(1, i + 1);
        }
        let pairs = (0..l).map(|p| if p == 0 { (field.one(), delta.clone()) } else { (field.zero(), field.zero()) }).collect();
        let kind = NormalKind::Arf { pairs, tail: vec![field.zero(); n - 2 * l] };
        let out = QuadNormalForm { field, nvars: n, kind, transition: red.c };
        debug_assert_eq!(red.current, out.form());
        return Ok(out);
    }
    let kind = NormalKind::Char2Solvable { half_rank: l, square_term: false };
    let out = QuadNormalForm { field, nvars: n, kind, transition: red.c };
    debug_assert_eq!(red.current, out.form());
    Ok(out)
}

/// `a x^2 + x y + b y^2` with `Tr(ab) = 1` to `x^2 + x y + delta y^2`.
fn to_delta_pair(red: &mut Reducer, i: usize, delta: &Scalar) -> Result<(), QuadError> {
    let field = red.field();
    let a = red.current.coeff(i, i);
    let r = field.sqrt(&a)?.expect("roots exist");
    // x -> x/r, y -> r y gives (1, ab)
    red.scale(i, &r.inv()?);
    red.scale(i + 1, &r);
    let c = red.current.coeff(i + 1, i + 1);
    let e = field
        .solve_affine_quadratic_char2(&field.one(), &(&c + delta))?
        .expect("equal traces give a root");
    red.shear(i, &e, i + 1);
    debug_assert_eq!(red.current.coeff(i + 1, i + 1), *delta);
    Ok(())
}

/// Re-pairs two `(1, delta)` blocks at `(i, i+1)` and `(j, j+1)` into two
/// blocks of trace 0.
fn merge_anisotropic(red: &mut Reducer, i: usize, j: usize) -> Result<(), QuadError> {
    let field = red.field();
    let n = red.current.nvars;
    let delta = red.current.coeff(i + 1, i + 1);
    let unit = |k: usize| -> Vec<Scalar> { (0..n).map(|r| if r == k { field.one() } else { field.zero() }).collect() };
    let mut v = unit(i);
    vec_axpy(&mut v, &field.one(), &unit(j));
    let mut w = unit(i + 1);
    vec_axpy(&mut w, &delta, &v);
    let gram = red.current.bilinear_matrix();
    let mut u3 = unit(j);
    let mut u4 = unit(j + 1);
    for u in [&mut u3, &mut u4] {
        let buw = bform(&gram, u, &w);
        let buv = bform(&gram, u, &v);
        vec_axpy(u, &buw, &v);
        vec_axpy(u, &buv, &w);
    }
    let scale = bform(&gram, &u3, &u4).inv()?;
    for x in u4.iter_mut() {
        *x = &*x * &scale;
    }
    let cols: Vec<Vec<Scalar>> = (0..n)
        .map(|k| match k {
            _ if k == i => v.clone(),
            _ if k == i + 1 => w.clone(),
            _ if k == j => u3.clone(),
            _ if k == j + 1 => u4.clone(),
            _ => unit(k),
        })
        .collect();
    let m = matrix_from_columns(field, &cols);
    red.apply(&m);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse_poly;

    fn form(field: Field, vars: &str, text: &str) -> QuadraticForm {
        let v: Vec<String> = vars.split(',').map(str::to_string).collect();
        quad_extract(&parse_poly(text, &v, field, 3).unwrap()).unwrap()
    }

    fn lits(field: Field, xs: &[&str]) -> Vec<Scalar> {
        xs.iter().map(|s| field.parse_literal(s).unwrap()).collect()
    }

    #[test]
    fn extract_examples() {
        let q = Field::Rational;
        let a = form(q, "x,y", "x^2 + y^3");
        assert_eq!(a.entries().count(), 1);
        assert_eq!(a.coeff(0, 0), q.one());
        let f2 = Field::prime(2).unwrap();
        let b = form(f2, "x,y", "x*y + x^3");
        assert_eq!(b.coeff(0, 1), f2.one());
        assert!(form(q, "x,y", "y^3").is_zero());
        let v = vec!["x".to_string()];
        assert_eq!(quad_extract(&parse_poly("x + x^2", &v, q, 3).unwrap()), Err(QuadError::NotInMaximalIdealSquared));
        assert!(matches!(quad_extract(&parse_poly("x^2", &v, q, 1).unwrap()), Err(QuadError::LowPrecision(1))));
    }

    #[test]
    fn diagonalize_examples() {
        let q = Field::Rational;
        let a = form(q, "x1,x2", "x1*x2");
        let nf = diagonalize_ne2(&a).unwrap();
        assert_eq!(nf.kind, NormalKind::Diagonal { coeffs: lits(q, &["1", "-1"]) });
        assert!(nf.verify(&a));

        let f7 = Field::prime(7).unwrap();
        let b = form(f7, "x", "3*x^2");
        let nf = diagonalize_ne2(&b).unwrap();
        assert_eq!(nf.kind, NormalKind::Diagonal { coeffs: lits(f7, &["3"]) });
        assert!(nf.verify(&b));
        assert_eq!(nf.transition, Matrix::identity(f7, 1));

        let z = QuadraticForm::zero(q, 3);
        let nf = diagonalize_ne2(&z).unwrap();
        assert_eq!(nf.rank(), 0);
        assert!(nf.verify(&z));

        assert!(diagonalize_ne2(&form(Field::prime(2).unwrap(), "x", "x^2")).is_err());
    }

    #[test]
    fn rational_squarefree_reduction() {
        let q = Field::Rational;
        let a = form(q, "x,y,z", "8*x^2 + 3/4*y^2 - 18*z^2 + 2*x*y");
        let nf = diagonalize_ne2(&a).unwrap();
        assert!(nf.verify(&a));
        let NormalKind::Diagonal { coeffs } = nf.kind() else { panic!() };
        for c in coeffs {
            let r = c.as_rational().unwrap();
            assert!(r.is_integer());
            assert_eq!(squarefree_int(r.numer()).1, BigInt::one());
        }
    }

    #[test]
    fn normalize_examples() {
        let q = Field::Rational;
        let a = form(q, "x,y", "4*x^2 + 9*y^2");
        let nf = diagonalize_ne2(&a).unwrap();
        let SquareNormalization::Unit(u) = normalize_squares(&nf).unwrap() else { panic!() };
        assert_eq!(u.kind, NormalKind::UnitDiagonal { rank: 2 });
        assert!(u.verify(&a));

        let b = form(q, "x", "2*x^2");
        let nf = diagonalize_ne2(&b).unwrap();
        assert_eq!(normalize_squares(&nf).unwrap(), SquareNormalization::Absent { signs: Some(vec![Sign::Positive]) });

        let f7 = Field::prime(7).unwrap();
        let squares: Vec<u64> = (1..7u64).map(|x| x * x % 7).collect();
        let c = form(f7, "x", "3*x^2");
        let res = normalize_squares(&diagonalize_ne2(&c).unwrap()).unwrap();
        assert_eq!(matches!(res, SquareNormalization::Unit(_)), squares.contains(&3));
        let d = form(f7, "x", "2*x^2");
        let SquareNormalization::Unit(u) = normalize_squares(&diagonalize_ne2(&d).unwrap()).unwrap() else { panic!() };
        assert!(u.verify(&d));
    }

    #[test]
    fn arf_decompose_examples() {
        let f2 = Field::prime(2).unwrap();
        let d = arf_decompose(&form(f2, "x1,x2,x3", "x1*x2 + x3^2")).unwrap();
        assert_eq!(d.radical, vec![lits(f2, &["0", "0", "1"])]);
        assert_eq!(d.pairs, vec![(lits(f2, &["1", "0", "0"]), lits(f2, &["0", "1", "0"]))]);

        let d = arf_decompose(&form(f2, "x1", "x1^2")).unwrap();
        assert_eq!(d.radical.len(), 1);
        assert!(d.pairs.is_empty());

        let d = arf_decompose(&QuadraticForm::zero(f2, 2)).unwrap();
        assert_eq!(d.radical.len(), 2);
    }

    #[test]
    fn arf_normal_examples() {
        let f2 = Field::prime(2).unwrap();
        let a = form(f2, "x1,x2,x3", "x1^2 + x1*x2 + x2^2 + x3^2");
        let nf = arf_normal_form(&a).unwrap();
        assert_eq!(nf.kind, NormalKind::Arf { pairs: vec![(f2.one(), f2.one())], tail: vec![f2.one()] });
        assert!(nf.verify(&a));

        let b = form(f2, "x1,x2", "x1*x2");
        let nf = arf_normal_form(&b).unwrap();
        assert_eq!(nf.kind, NormalKind::Arf { pairs: vec![(f2.zero(), f2.zero())], tail: vec![] });

        let c = form(f2, "x1,x2", "x1^2 + x2^2");
        let nf = arf_normal_form(&c).unwrap();
        assert_eq!(nf.kind, NormalKind::Arf { pairs: vec![], tail: vec![f2.one(), f2.one()] });

        let f8 = Field::binary(3).unwrap();
        let d = form(f8, "x1,x2,x3,x4", "t*x1*x3 + x2*x4 + (t+1)*x1^2 + x3*x4 + x2^2");
        let nf = arf_normal_form(&d).unwrap();
        assert_eq!(nf.rank(), d.hessian_rank());
        assert!(nf.verify(&d));
    }

    #[test]
    fn solvable_reduction_examples() {
        let f2 = Field::prime(2).unwrap();
        let a = form(f2, "x1,x2", "x1^2 + x1*x2 + x2^2");
        assert_eq!(arf_reduce_solvable(&arf_normal_form(&a).unwrap()).unwrap(), None);

        let f4 = Field::binary(2).unwrap();
        let b = form(f4, "x1,x2", "x1^2 + x1*x2 + x2^2");
        let r = arf_reduce_solvable(&arf_normal_form(&b).unwrap()).unwrap().unwrap();
        assert_eq!(r.kind, NormalKind::Char2Solvable { half_rank: 1, square_term: false });
        assert!(r.verify(&b));

        let c = form(f2, "x1,x2,x3,x4", "x1*x2 + x3^2 + x4^2");
        let r = arf_reduce_solvable(&arf_normal_form(&c).unwrap()).unwrap().unwrap();
        assert_eq!(r.kind, NormalKind::Char2Solvable { half_rank: 1, square_term: true });
        assert_eq!(r.form(), form(f2, "x1,x2,x3,x4", "x1*x2 + x3^2"));
        assert!(r.verify(&c));
    }

    #[test]
    fn canonical_forms_verify() {
        for field in [Field::prime(2).unwrap(), Field::binary(2).unwrap(), Field::binary(3).unwrap()] {
            let elems = field.elements().unwrap();
            let n = 4;
            let mut seed = 7u64;
            for _ in 0..60 {
                let mut entries = Vec::new();
                for i in 0..n {
                    for j in i..n {
                        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        entries.push(((i, j), elems[(seed >> 33) as usize % elems.len()].clone()));
                    }
                }
                let q = QuadraticForm::from_coeffs(field, n, entries);
                let c = canonical_form_char2(&q).unwrap();
                assert!(c.verify(&q), "{field}: {:?}", q);
                assert_eq!(c.rank(), q.hessian_rank());
            }
        }
    }

    #[test]
    fn descriptor_shape() {
        let f2 = Field::prime(2).unwrap();
        let nf = arf_normal_form(&form(f2, "x1,x2,x3", "x1^2 + x1*x2 + x2^2 + x3^2")).unwrap();
        let d = nf.descriptor();
        assert_eq!(d["variant"], "arf");
        assert_eq!(d["rank"], 2);
        assert_eq!(d["coefficients"]["tail"], json!(["1"]));
    }
}
