//! Uniqueness of the residual part: from `phi` with `f0(phi) = f1`, where
//! `f_j = q + g_j`, build a tail automorphism `phi'` with `g0(phi') = g1`.
//!
//! Writing the head components of `phi` as `l_i + k_i`, an implicit
//! system `F(psi, x_tail) = 0` is solved for the head variables and
//! `phi'_t = phi_t(psi, x_tail)`. The matching condition is
//! `q_head(phi_head(psi, x)) = q_head(psi)`, which follows from:
//!
//! * odd characteristic: `F_i = 2 l_i + k_i`;
//! * characteristic 2, per pair `(i, i+1)` with squares `a, b`:
//!   `F_i = l_i + b k_{i+1}`, `F_{i+1} = l_{i+1} + k_{i+1} + a k_i`,
//!   valid whenever `l` is an isometry of the head form.
//!
//! When the head block of `phi` is not an isometry (possible in
//! characteristic 2 once square tail terms are present), `l` is replaced by
//! a nearby isometry `A y`, or the system `phi_head(y, x) = A y` is used.

use serde_json::{json, Value};
use thiserror::Error;

use crate::field::{Field, Scalar};
use crate::ift::{ift_solve, IftError, ImplicitSystem};
use crate::jet::{CoordinateChange, Jet, JetError};
use crate::linalg::Matrix;
use crate::quadform::{NormalKind, QuadError, QuadNormalForm, QuadraticForm};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("hypothesis violated: f0(phi) differs from f1 at precision {0}")]
    Hypothesis(u32),
    #[error("phi is not an automorphism")]
    NotAutomorphism,
    #[error("malformed problem: {0}")]
    Shape(String),
    #[error("linear block of phi on the tail variables is singular")]
    TailBlockSingular,
    #[error("no linearization of the head block yields an invertible implicit system")]
    NoAdmissibleLinearization,
    #[error("constructed tail change fails g0(phi') = g1")]
    Verification,
    #[error(transparent)]
    Ift(#[from] IftError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportProblem {
    quad: QuadNormalForm,
    g0: Jet,
    g1: Jet,
    phi: CoordinateChange,
    precision: u32,
}

fn head_quadratic_coeffs(quad: &QuadNormalForm) -> Result<(), TransportError> {
    match (quad.kind(), quad.field().is_char2()) {
        (NormalKind::Diagonal { .. } | NormalKind::UnitDiagonal { .. }, false) => Ok(()),
        (NormalKind::Arf { .. } | NormalKind::Char2Solvable { .. }, true) => Ok(()),
        _ => Err(TransportError::Shape("normal form does not match the characteristic".into())),
    }
}

impl TransportProblem {
    /// Validates shapes and the hypothesis `f0(phi) = f1` at `precision`.
    pub fn new(
        quad: QuadNormalForm,
        g0: Jet,
        g1: Jet,
        phi: CoordinateChange,
        precision: u32,
    ) -> Result<Self, TransportError> {
        head_quadratic_coeffs(&quad)?;
        let n = quad.nvars();
        let h = quad.rank();
        let field = quad.field();
        if phi.nvars() != n || g0.nvars() != n - h || g1.nvars() != n - h {
            return Err(TransportError::Shape(format!(
                "expected phi in {n} variables and residuals in {} variables",
                n - h
            )));
        }
        if phi.field() != field || g0.field() != field || g1.field() != field {
            return Err(TransportError::Shape("field mismatch".into()));
        }
        for (name, p) in [("phi", phi.precision()), ("g0", g0.precision()), ("g1", g1.precision())] {
            if p < precision {
                return Err(TransportError::Shape(format!("{name} has precision {p} below {precision}")));
            }
        }
        let min_order = if field.is_char2() { 2 } else { 3 };
        for (name, g) in [("g0", &g0), ("g1", &g1)] {
            if g.order().is_some_and(|o| o < min_order) {
                return Err(TransportError::Shape(format!("{name} must lie in m^{min_order}")));
            }
            if field.is_char2() && g.homogeneous_part(2).terms().any(|(m, _)| !m.exps().iter().all(|&e| e == 0 || e == 2)) {
                return Err(TransportError::Shape(format!("{name} has a non-diagonal quadratic part")));
            }
        }
        if !phi.is_automorphism() {
            return Err(TransportError::NotAutomorphism);
        }
        let p = TransportProblem {
            quad,
            g0: g0.with_precision(precision),
            g1: g1.with_precision(precision),
            phi: phi.with_precision(precision),
            precision,
        };
        if p.f0().compose(&p.phi)? != p.f1() {
            return Err(TransportError::Hypothesis(precision));
        }
        Ok(p)
    }

    pub fn quad(&self) -> &QuadNormalForm {
        &self.quad
    }

    pub fn g0(&self) -> &Jet {
        &self.g0
    }

    pub fn g1(&self) -> &Jet {
        &self.g1
    }

    pub fn phi(&self) -> &CoordinateChange {
        &self.phi
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    fn head(&self) -> usize {
        self.quad.rank()
    }

    fn embed_tail(&self, g: &Jet) -> Jet {
        let n = self.quad.nvars();
        let h = self.head();
        g.embed(n, &(h..n).collect::<Vec<_>>())
    }

    pub fn f0(&self) -> Jet {
        &self.quad.head_form().to_jet(self.precision) + &self.embed_tail(&self.g0)
    }

    pub fn f1(&self) -> Jet {
        &self.quad.head_form().to_jet(self.precision) + &self.embed_tail(&self.g1)
    }

    /// Linear block of `phi` on the tail variables.
    pub fn tail_block(&self) -> Matrix {
        let lin = self.phi.linear_part();
        let n = self.quad.nvars();
        let h = self.head();
        let mut m = Matrix::zeros(self.quad.field(), n - h, n - h);
        for i in h..n {
            for j in h..n {
                m.set(i - h, j - h, lin.get(i, j).clone());
            }
        }
        m
    }
}

/// Composes `phi` with a linear change `sigma` of the tail variables that
/// makes the tail linear block the identity, replacing `g1` by
/// `g1(sigma)`. Returns the new problem and `sigma` in tail variables.
pub fn normalize_tail_linear(p: &TransportProblem) -> Result<(TransportProblem, CoordinateChange), TransportError> {
    let field = p.quad.field();
    let n = p.quad.nvars();
    let h = p.head();
    let t = n - h;
    let prec = p.precision;
    if t == 0 {
        return Ok((p.clone(), CoordinateChange::identity(field, 0, prec)));
    }
    let m = p.tail_block().inverse().ok_or(TransportError::TailBlockSingular)?;
    let sigma_tail = CoordinateChange::from_matrix(&m, prec);
    let mut full = Matrix::identity(field, n);
    for i in 0..t {
        for j in 0..t {
            full.set(h + i, h + j, m.get(i, j).clone());
        }
    }
    let sigma_full = CoordinateChange::from_matrix(&full, prec);
    let phi = p.phi.then(&sigma_full)?;
    let g1 = p.g1.compose(&sigma_tail)?;
    let q = TransportProblem::new(p.quad.clone(), p.g0.clone(), g1, phi, prec)?;
    Ok((q, sigma_tail))
}

/// How the head block of `phi` was linearized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Linearization {
    /// `l_i` is the linear part of `phi_i`.
    Direct,
    /// `l = A y` for an isometry `A` of the head form.
    Isometry(Matrix),
    /// The system `phi_head(y, x) - A y = 0`.
    FixedPoint(Matrix),
}

impl Linearization {
    pub fn name(&self) -> &'static str {
        match self {
            Linearization::Direct => "direct",
            Linearization::Isometry(_) => "isometry",
            Linearization::FixedPoint(_) => "fixed-point",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportResult {
    /// Automorphism of the tail variables with `g0(phi_prime) = g1`.
    pub phi_prime: CoordinateChange,
    /// Solved head components, in tail variables.
    pub psi: Vec<Jet>,
    pub linearization: Linearization,
}

impl TransportResult {
    pub fn to_json(&self, tail_vars: &[String]) -> Value {
        json!({
            "phi_prime": self.phi_prime.components().iter().map(|c| c.to_text(tail_vars)).collect::<Vec<_>>(),
            "psi": self.psi.iter().map(|c| c.to_text(tail_vars)).collect::<Vec<_>>(),
            "linearization": self.linearization.name(),
        })
    }
}

/// Runs the construction and checks `g0(phi') = g1`.
pub fn transport(p: &TransportProblem) -> Result<TransportResult, TransportError> {
    if !p.quad.field().is_char2() {
        return solve(p);
    }
    let (normalized, sigma) = normalize_tail_linear(p)?;
    let mut r = solve(&normalized)?;
    if p.g0.nvars() > 0 {
        let inv = sigma.linear_inverse().ok_or(TransportError::TailBlockSingular)?;
        r.phi_prime = r.phi_prime.then(&inv)?;
    }
    if p.g0.compose(&r.phi_prime)? != p.g1 || !r.phi_prime.is_automorphism() {
        return Err(TransportError::Verification);
    }
    Ok(r)
}

fn linear_jet(field: Field, n: usize, prec: u32, row: &[Scalar]) -> Jet {
    let terms = row.iter().enumerate().map(|(j, c)| {
        let mut e = vec![0; n];
        e[j] = 1;
        (e, c.clone())
    });
    Jet::from_terms(field, n, prec, terms).unwrap()
}

/// `(A y)_i` as jets in all `n` variables, `y` the head variables.
fn apply_head_matrix(a: &Matrix, field: Field, n: usize, prec: u32) -> Vec<Jet> {
    (0..a.rows()).map(|i| linear_jet(field, n, prec, a.row(i))).collect()
}

fn head_form_in_head_vars(quad: &QuadNormalForm) -> QuadraticForm {
    let h = quad.rank();
    let full = quad.head_form();
    QuadraticForm::from_coeffs(full.field(), h, full.entries().map(|(&k, c)| (k, c.clone())))
}

/// Isometries of the head form tried in characteristic 2 when the head
/// block itself is not one: the identity, transvections
/// `y -> y + b(y, v)/P(v) v` along 0/1 vectors, and their pairwise
/// products.
fn isometry_candidates(p: &QuadraticForm) -> Vec<Matrix> {
    let field = p.field();
    let h = p.nvars();
    let mut out = vec![Matrix::identity(field, h)];
    if h > 8 {
        return out;
    }
    let b = p.bilinear_matrix();
    let mut transvections = Vec::new();
    for mask in 1u32..(1 << h) {
        let v: Vec<Scalar> = (0..h).map(|i| if mask >> i & 1 == 1 { field.one() } else { field.zero() }).collect();
        let pv = p.eval(&v);
        let Ok(inv) = pv.inv() else { continue };
        let bv = b.mul_vec(&v);
        let mut m = Matrix::identity(field, h);
        for r in 0..h {
            for c in 0..h {
                let add = &(&v[r] * &bv[c]) * &inv;
                m.set(r, c, m.get(r, c) + &add);
            }
        }
        debug_assert_eq!(p.transform(&m), *p);
        transvections.push(m);
    }
    out.extend(transvections.iter().cloned());
    for s in &transvections {
        for t in &transvections {
            let m = s.mul(t);
            if !out.contains(&m) {
                out.push(m);
            }
        }
    }
    out
}

fn solve(p: &TransportProblem) -> Result<TransportResult, TransportError> {
    let field = p.quad.field();
    let n = p.quad.nvars();
    let h = p.head();
    let t = n - h;
    let prec = p.precision;
    if t == 0 {
        return Ok(TransportResult {
            phi_prime: CoordinateChange::identity(field, 0, prec),
            psi: (0..h).map(|_| Jet::zero(field, 0, prec)).collect(),
            linearization: Linearization::Direct,
        });
    }
    if h == 0 {
        let r = TransportResult { phi_prime: p.phi.clone(), psi: Vec::new(), linearization: Linearization::Direct };
        return finish(p, r);
    }
    let phi_h: Vec<Jet> = p.phi.components()[..h].to_vec();
    let lin = p.phi.linear_part();
    let mut t_block = Matrix::zeros(field, h, h);
    for i in 0..h {
        for j in 0..h {
            t_block.set(i, j, lin.get(i, j).clone());
        }
    }

    let mut attempts: Vec<(Linearization, Vec<Jet>)> = Vec::new();
    if !field.is_char2() {
        let two = field.from_i64(2);
        let eqs = phi_h
            .iter()
            .map(|phi_i| {
                let l = phi_i.homogeneous_part(1);
                let k = phi_i - &l;
                &l.scale(&two) + &k
            })
            .collect();
        attempts.push((Linearization::Direct, eqs));
    } else {
        let ph = head_form_in_head_vars(&p.quad);
        let pair_eqs = |a_mat: &Matrix| -> Vec<Jet> {
            let l = apply_head_matrix(a_mat, field, n, prec);
            let k: Vec<Jet> = phi_h.iter().zip(&l).map(|(f, li)| f - li).collect();
            let mut eqs = Vec::with_capacity(h);
            for pi in 0..h / 2 {
                let (i, j) = (2 * pi, 2 * pi + 1);
                let a = ph.coeff(i, i);
                let b = ph.coeff(j, j);
                eqs.push(&l[i] + &k[j].scale(&b));
                eqs.push(&(&l[j] + &k[j]) + &k[i].scale(&a));
            }
            eqs
        };
        if ph.transform(&t_block) == ph {
            attempts.push((Linearization::Direct, pair_eqs(&t_block)));
        } else {
            for a in isometry_candidates(&ph) {
                attempts.push((Linearization::Isometry(a.clone()), pair_eqs(&a)));
                let ay = apply_head_matrix(&a, field, n, prec);
                let eqs = phi_h.iter().zip(&ay).map(|(f, l)| f - l).collect();
                attempts.push((Linearization::FixedPoint(a), eqs));
            }
        }
    }

    // implicit-system layout: tail variables first, then the head ones
    let positions: Vec<usize> = (0..n).map(|i| if i < h { t + i } else { i - h }).collect();
    for (linearization, eqs) in attempts {
        let reordered: Vec<Jet> = eqs.iter().map(|e| e.embed(n, &positions)).collect();
        let sys = match ImplicitSystem::new(t, reordered) {
            Ok(s) => s,
            Err(IftError::SingularJacobian) => continue,
            Err(e) => return Err(e.into()),
        };
        let psi = ift_solve(&sys, prec)?;
        let mut images = psi.clone();
        images.extend((0..t).map(|j| Jet::variable(field, t, j, prec)));
        let comps = p.phi.components()[h..]
            .iter()
            .map(|c| c.substitute(&images, t))
            .collect::<Result<Vec<_>, _>>()?;
        let phi_prime = CoordinateChange::new(comps)?;
        return finish(p, TransportResult { phi_prime, psi, linearization });
    }
    Err(TransportError::NoAdmissibleLinearization)
}

fn finish(p: &TransportProblem, r: TransportResult) -> Result<TransportResult, TransportError> {
    if p.g0.compose(&r.phi_prime)? != p.g1 || !r.phi_prime.is_automorphism() {
        return Err(TransportError::Verification);
    }
    Ok(r)
}
